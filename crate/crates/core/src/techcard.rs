//! Technology card: process constants, operating band and passive-element limits.
//!
//! The card is a TOML document with four sections (`[general]`, `[device]`,
//! `[passives]`, `[limits]`). Every value is in SI base units; there is no
//! engineering-suffix parsing.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

const DEFAULT_130NM: &str = include_str!("../data/default-130nm.toml");

/// A technology limit of the passive elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Limit {
    /// Smallest realizable inductance.
    LsMin,
    /// Largest realizable inductance.
    LgMax,
    /// Smallest gate-source shunt capacitance.
    CxMin,
    /// Largest MiM capacitance.
    CMax,
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Limit::LsMin => "LsMin",
            Limit::LgMax => "LgMax",
            Limit::CxMin => "CxMin",
            Limit::CMax => "CMax",
        })
    }
}

#[derive(Debug, Error)]
pub enum TechError {
    #[error("cannot read technology card {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse technology card: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize technology card: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error(
        "invalid band: need band_lo < f0 < band_hi (band_lo={band_lo}, f0={f0}, band_hi={band_hi})"
    )]
    InvalidBand { band_lo: f64, f0: f64, band_hi: f64 },
    #[error("inconsistent limits: {field}")]
    InconsistentLimits { field: &'static str },
    #[error("field {field} must be {requirement}, got {value}")]
    OutOfRange {
        field: &'static str,
        requirement: &'static str,
        value: f64,
    },
}

/// Operating point and port terminations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct General {
    /// Operating frequency (Hz).
    pub f0: f64,
    /// Lower matching-band edge (Hz).
    pub band_lo: f64,
    /// Upper matching-band edge (Hz).
    pub band_hi: f64,
    /// Source resistance (Ω).
    pub rs: f64,
    /// External load (Ω).
    pub rl: f64,
    /// Supply voltage (V). Carried for provenance; no small-signal quantity depends on it.
    pub vdd: f64,
}

/// MOS device constants shared by M1 and the cascode M2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConstants {
    /// Simplified-model transconductance constant, gm = k_gm·√(I_D·W) (S/√(A·m)).
    pub k_gm: f64,
    /// Gate capacitance density, cgs = k_cgs·W·L (F/m²).
    pub k_cgs: f64,
    /// Subthreshold slope factor.
    pub n_slope: f64,
    /// Specific current per unit W/L (A).
    pub i0_spec: f64,
    /// Normalized mobility-reduction coefficient of the all-region model.
    pub theta: f64,
    pub gamma_noise: f64,
    pub alpha_noise: f64,
    /// cgd as a fraction of cgs.
    pub cgd_frac: f64,
    /// cgb as a fraction of cgs.
    pub cgb_frac: f64,
    /// Fraction of the cascode device's intrinsic cgs loading the cascode node.
    pub cgs2_frac: f64,
    /// Junction capacitance per unit width at the cascode node (F/m), applied to W1 + W2.
    pub cj_width: f64,
    /// Cascode output conductance (S).
    pub gds_out: f64,
    /// Cascode output capacitance (F). Defaults to the cascode device's cgd.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_out: Option<f64>,
}

/// Metal stack and MiM capacitor process data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PassiveProcess {
    /// Spiral metal sheet resistance (Ω/sq).
    pub sheet_res: f64,
    /// Spiral metal bulk resistivity (Ω·m), used only for the skin depth.
    pub metal_resistivity: f64,
    /// Substrate loss coefficient: adds sub_loss_k·(f/f0) to 1/Q.
    pub sub_loss_k: f64,
    /// MiM capacitance per area (F/m²).
    pub cap_density: f64,
}

/// Technology limits of the passive elements plus the spiral geometry grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PassiveLimits {
    pub ls_min: f64,
    pub lg_max: f64,
    pub cx_min: f64,
    pub c_max: f64,
    /// Turn spacing fixed by the technology (m).
    pub spacing: f64,
    pub nt_min: f64,
    pub nt_max: f64,
    pub od_min: f64,
    pub od_max: f64,
    pub od_step: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub w_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechnologyCard {
    pub general: General,
    pub device: DeviceConstants,
    pub passives: PassiveProcess,
    pub limits: PassiveLimits,
}

fn positive(field: &'static str, value: f64) -> Result<(), TechError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(TechError::OutOfRange {
            field,
            requirement: "finite and > 0",
            value,
        })
    }
}

fn non_negative(field: &'static str, value: f64) -> Result<(), TechError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(TechError::OutOfRange {
            field,
            requirement: "finite and >= 0",
            value,
        })
    }
}

impl TechnologyCard {
    /// The bundled 130 nm card.
    pub fn default_130nm() -> Self {
        Self::from_toml_str(DEFAULT_130NM).expect("bundled technology card is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, TechError> {
        let card: TechnologyCard = toml::from_str(text)?;
        card.validate()?;
        Ok(card)
    }

    pub fn to_toml_string(&self) -> Result<String, TechError> {
        Ok(toml::to_string(self)?)
    }

    /// Angular operating frequency ω0 = 2π·f0.
    pub fn omega0(&self) -> f64 {
        2.0 * PI * self.general.f0
    }

    /// Parallel loss resistance ω0·L·Q of an inductor at the operating frequency.
    pub fn parallel_resistance(&self, inductance: f64, q: f64) -> f64 {
        self.omega0() * inductance * q
    }

    /// Plate area needed for a MiM capacitor of the given value.
    pub fn mim_area(&self, capacitance: f64) -> f64 {
        capacitance / self.passives.cap_density
    }

    /// Short content hash (hex) of the canonical serialization, used for provenance.
    pub fn hash(&self) -> String {
        let canonical = self
            .to_toml_string()
            .expect("validated card always serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), TechError> {
        let g = &self.general;
        positive("general.f0", g.f0)?;
        positive("general.band_lo", g.band_lo)?;
        positive("general.band_hi", g.band_hi)?;
        if !(g.band_lo < g.f0 && g.f0 < g.band_hi) {
            return Err(TechError::InvalidBand {
                band_lo: g.band_lo,
                f0: g.f0,
                band_hi: g.band_hi,
            });
        }
        positive("general.rs", g.rs)?;
        positive("general.rl", g.rl)?;
        positive("general.vdd", g.vdd)?;

        let d = &self.device;
        positive("device.k_gm", d.k_gm)?;
        positive("device.k_cgs", d.k_cgs)?;
        positive("device.n_slope", d.n_slope)?;
        positive("device.i0_spec", d.i0_spec)?;
        positive("device.alpha_noise", d.alpha_noise)?;
        non_negative("device.theta", d.theta)?;
        if d.theta >= 1.0 {
            return Err(TechError::OutOfRange {
                field: "device.theta",
                requirement: "< 1",
                value: d.theta,
            });
        }
        non_negative("device.gamma_noise", d.gamma_noise)?;
        non_negative("device.cgd_frac", d.cgd_frac)?;
        non_negative("device.cgb_frac", d.cgb_frac)?;
        non_negative("device.cgs2_frac", d.cgs2_frac)?;
        non_negative("device.cj_width", d.cj_width)?;
        non_negative("device.gds_out", d.gds_out)?;
        if let Some(c_out) = d.c_out {
            non_negative("device.c_out", c_out)?;
        }

        let p = &self.passives;
        positive("passives.sheet_res", p.sheet_res)?;
        positive("passives.metal_resistivity", p.metal_resistivity)?;
        positive("passives.cap_density", p.cap_density)?;
        non_negative("passives.sub_loss_k", p.sub_loss_k)?;

        let l = &self.limits;
        non_negative("limits.ls_min", l.ls_min)?;
        positive("limits.lg_max", l.lg_max)?;
        non_negative("limits.cx_min", l.cx_min)?;
        positive("limits.c_max", l.c_max)?;
        if l.lg_max <= l.ls_min {
            return Err(TechError::InconsistentLimits {
                field: "ls_min must be below lg_max",
            });
        }
        if l.c_max <= l.cx_min {
            return Err(TechError::InconsistentLimits {
                field: "cx_min must be below c_max",
            });
        }
        positive("limits.spacing", l.spacing)?;
        positive("limits.nt_min", l.nt_min)?;
        positive("limits.od_min", l.od_min)?;
        positive("limits.od_step", l.od_step)?;
        positive("limits.w_min", l.w_min)?;
        positive("limits.w_step", l.w_step)?;
        if l.nt_max < l.nt_min {
            return Err(TechError::InconsistentLimits {
                field: "nt_min must not exceed nt_max",
            });
        }
        if l.od_max < l.od_min {
            return Err(TechError::InconsistentLimits {
                field: "od_min must not exceed od_max",
            });
        }
        if l.w_max < l.w_min {
            return Err(TechError::InconsistentLimits {
                field: "w_min must not exceed w_max",
            });
        }
        Ok(())
    }
}

impl fmt::Display for TechnologyCard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "f0={} Hz, Rs={} Ω, L_S,min={} H, L_g,max={} H, C_max={} F",
            self.general.f0,
            self.general.rs,
            self.limits.ls_min,
            self.limits.lg_max,
            self.limits.c_max
        )
    }
}

/// Read and validate a technology card from disk.
pub fn load_card(path: impl AsRef<Path>) -> Result<TechnologyCard, TechError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| TechError::Io {
        path: path.display().to_string(),
        source,
    })?;
    TechnologyCard::from_toml_str(&text)
}
