//! Analytic MOS model for the input device M1 and the cascode M2.
//!
//! Two modes are available. `Simplified` is the square-root law
//! gm = k_gm·√(I_D·W) with cgs ∝ W·L. `AllRegion` is a charge-based
//! interpolation valid from weak to strong inversion,
//!
//! ```text
//! u   = (V_G − V_T0)/(n·U_T) = t − 1 + ln t,     t = √(1 + 4·i) − 1
//! I_D = I_spec · i / (1 + θ·t),                  I_spec = I0·W/L
//! ```
//!
//! With θ = 0 this gives gm = (I_D/(n·U_T))·2/(1 + √(1 + 4·IC)). The mobility
//! reduction term θ bends the strong-inversion characteristic so that the third
//! derivative g3 changes sign once in moderate inversion.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::techcard::TechnologyCard;

/// Thermal voltage at 300 K (V).
pub const THERMAL_VOLTAGE: f64 = 0.02585;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviceError {
    #[error("{field} must be positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("gm derivatives need the all-region model")]
    ModeUnsupported,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DeviceMode {
    Simplified,
    #[default]
    AllRegion,
}

/// M1 sizing and bias plus derived small-signal quantities. M2 has width W1/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DevicePoint {
    pub w1: f64,
    pub l_ch: f64,
    pub id: f64,
    pub mode: DeviceMode,
    pub gm: f64,
    pub cgs: f64,
    pub cgd: f64,
    pub cgb: f64,
    pub ft: f64,
    pub gm2: f64,
    /// Intrinsic gate-source capacitance of M2.
    pub cgs2: f64,
    /// Inversion coefficient I_D/(I0·W1/L).
    pub ic: f64,
    /// Gate overdrive V_G − V_T0 of M1 at this bias (all-region mode; 0 otherwise).
    pub vgt: f64,
}

impl DevicePoint {
    pub fn w2(&self) -> f64 {
        self.w1 / 2.0
    }

    /// Gate-drain capacitance of M2 (its output capacitance to the AC-grounded gate).
    pub fn cgd2(&self, tech: &TechnologyCard) -> f64 {
        tech.device.cgd_frac * self.cgs2
    }

    /// Total capacitance at the cascode node, excluding M1's cgd.
    pub fn cascode_node_cap(&self, tech: &TechnologyCard) -> f64 {
        tech.device.cgs2_frac * self.cgs2 + tech.device.cj_width * (self.w1 + self.w2())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmDerivatives {
    /// dI_D/dV_G (S).
    pub g1: f64,
    /// d²I_D/dV_G² (S/V).
    pub g2: f64,
    /// d³I_D/dV_G³ (S/V²).
    pub g3: f64,
}

/// Normalized current of the all-region model and its first three derivatives
/// with respect to u, all as functions of t.
fn normalized_derivatives(t: f64, theta: f64) -> [f64; 4] {
    let s = 1.0 + t;
    let s1 = t / s;
    let s2 = t / (s * s * s);
    let s3 = t * (1.0 - 2.0 * t) / s.powi(5);

    let n0 = t * (t + 2.0) / 4.0;
    let n1 = t / 2.0;
    let n2 = t / (2.0 * s);
    let n3 = t / (2.0 * s * s * s);

    let d = 1.0 + theta * t;
    let (d1, d2, d3) = (theta * s1, theta * s2, theta * s3);
    let r0 = 1.0 / d;
    let r1 = -d1 / (d * d);
    let r2 = -d2 / (d * d) + 2.0 * d1 * d1 / (d * d * d);
    let r3 = -d3 / (d * d) + 6.0 * d1 * d2 / (d * d * d) - 6.0 * d1 * d1 * d1 / d.powi(4);

    [
        n0 * r0,
        n1 * r0 + n0 * r1,
        n2 * r0 + 2.0 * n1 * r1 + n0 * r2,
        n3 * r0 + 3.0 * n2 * r1 + 3.0 * n1 * r2 + n0 * r3,
    ]
}

/// t at a given inversion coefficient: root of t² + (2 − 4·ic·θ)·t − 4·ic = 0.
fn t_from_ic(ic: f64, theta: f64) -> f64 {
    let b = 2.0 - 4.0 * ic * theta;
    let disc = (b * b + 16.0 * ic).sqrt();
    if b >= 0.0 {
        8.0 * ic / (b + disc)
    } else {
        (disc - b) / 2.0
    }
}

/// t at a given normalized overdrive u, solving u = t − 1 + ln t in log space.
fn t_from_u(u: f64) -> f64 {
    let mut lt = if u > 1.0 { u.ln().max(0.0) } else { u - 1.0 };
    for _ in 0..100 {
        let e = lt.exp();
        let h = e + lt - 1.0 - u;
        let step = h / (e + 1.0);
        lt -= step;
        if step.abs() < 1e-15 * lt.abs().max(1.0) {
            break;
        }
    }
    lt.exp()
}

fn specific_current(w: f64, l_ch: f64, tech: &TechnologyCard) -> f64 {
    tech.device.i0_spec * w / l_ch
}

fn slope_voltage(tech: &TechnologyCard) -> f64 {
    tech.device.n_slope * THERMAL_VOLTAGE
}

fn all_region_gm(w: f64, l_ch: f64, id: f64, tech: &TechnologyCard) -> (f64, f64, f64) {
    let i_spec = specific_current(w, l_ch, tech);
    let ic = id / i_spec;
    let t = t_from_ic(ic, tech.device.theta);
    let d = normalized_derivatives(t, tech.device.theta);
    let gm = i_spec * d[1] / slope_voltage(tech);
    let vgt = slope_voltage(tech) * (t - 1.0 + t.ln());
    (gm, ic, vgt)
}

/// Drain current of the all-region model at gate overdrive `vgt` = V_G − V_T0.
pub fn drain_current(vgt: f64, w: f64, l_ch: f64, tech: &TechnologyCard) -> f64 {
    let t = t_from_u(vgt / slope_voltage(tech));
    let d = normalized_derivatives(t, tech.device.theta);
    specific_current(w, l_ch, tech) * d[0]
}

fn check_positive(field: &'static str, value: f64) -> Result<(), DeviceError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(DeviceError::NonPositive { field, value })
    }
}

/// Small-signal operating point of M1 (and M2 at W1/2, same current).
pub fn device_point(
    w1: f64,
    l_ch: f64,
    id: f64,
    tech: &TechnologyCard,
    mode: DeviceMode,
) -> Result<DevicePoint, DeviceError> {
    check_positive("w1", w1)?;
    check_positive("l_ch", l_ch)?;
    check_positive("id", id)?;
    let dev = &tech.device;
    let w2 = w1 / 2.0;
    let cgs = dev.k_cgs * w1 * l_ch;
    let cgd = dev.cgd_frac * cgs;
    let cgb = dev.cgb_frac * cgs;
    let cgs2 = dev.k_cgs * w2 * l_ch;
    let (gm, gm2, ic, vgt) = match mode {
        DeviceMode::Simplified => {
            let gm = dev.k_gm * (id * w1).sqrt();
            let gm2 = dev.k_gm * (id * w2).sqrt();
            (gm, gm2, id / specific_current(w1, l_ch, tech), 0.0)
        }
        DeviceMode::AllRegion => {
            let (gm, ic, vgt) = all_region_gm(w1, l_ch, id, tech);
            let (gm2, _, _) = all_region_gm(w2, l_ch, id, tech);
            (gm, gm2, ic, vgt)
        }
    };
    Ok(DevicePoint {
        w1,
        l_ch,
        id,
        mode,
        gm,
        cgs,
        cgd,
        cgb,
        ft: gm / (2.0 * PI * (cgs + cgd + cgb)),
        gm2,
        cgs2,
        ic,
        vgt,
    })
}

/// First three derivatives of I_D(V_G) at the device's bias.
pub fn gm_derivatives(
    point: &DevicePoint,
    tech: &TechnologyCard,
) -> Result<GmDerivatives, DeviceError> {
    if point.mode != DeviceMode::AllRegion {
        return Err(DeviceError::ModeUnsupported);
    }
    let i_spec = specific_current(point.w1, point.l_ch, tech);
    let t = t_from_ic(point.ic, tech.device.theta);
    let d = normalized_derivatives(t, tech.device.theta);
    let a = slope_voltage(tech);
    Ok(GmDerivatives {
        g1: i_spec * d[1] / a,
        g2: i_spec * d[2] / (a * a),
        g3: i_spec * d[3] / (a * a * a),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn card() -> TechnologyCard {
        TechnologyCard::default_130nm()
    }

    #[test]
    fn simplified_unit_constants() {
        let mut tech = card();
        tech.device.k_gm = 1.0;
        let p = device_point(0.1, 120e-9, 0.4, &tech, DeviceMode::Simplified).unwrap();
        assert!((p.gm - 0.2).abs() < 1e-15);
    }

    #[test]
    fn simplified_capacitances() {
        let tech = card();
        let p = device_point(32e-6, 120e-9, 0.4e-3, &tech, DeviceMode::Simplified).unwrap();
        let cgs = tech.device.k_cgs * 32e-6 * 120e-9;
        assert_eq!(p.cgs, cgs);
        assert_eq!(p.cgd, tech.device.cgd_frac * cgs);
        assert_eq!(p.cgb, tech.device.cgb_frac * cgs);
        assert!((p.ft - p.gm / (2.0 * PI * (p.cgs + p.cgd + p.cgb))).abs() < 1e-6);
        assert_eq!(p.gm2, tech.device.k_gm * (0.4e-3 * 16e-6f64).sqrt());
    }

    #[test]
    fn vanishing_width_limits() {
        let tech = card();
        let p = device_point(1e-15, 120e-9, 0.4e-3, &tech, DeviceMode::Simplified).unwrap();
        assert!(p.cgs < 1e-23);
        assert!(p.gm < 1e-7);
    }

    #[test]
    fn non_positive_inputs_rejected() {
        let tech = card();
        assert!(matches!(
            device_point(0.0, 120e-9, 1e-3, &tech, DeviceMode::AllRegion),
            Err(DeviceError::NonPositive { field: "w1", .. })
        ));
        assert!(matches!(
            device_point(1e-6, 120e-9, -1e-3, &tech, DeviceMode::AllRegion),
            Err(DeviceError::NonPositive { field: "id", .. })
        ));
    }

    #[test]
    fn all_region_matches_closed_form_without_mobility_reduction() {
        let mut tech = card();
        tech.device.theta = 0.0;
        for ic in [0.01, 0.3, 1.0, 7.0, 80.0] {
            let w1 = 32e-6;
            let id = ic * tech.device.i0_spec * w1 / 120e-9;
            let p = device_point(w1, 120e-9, id, &tech, DeviceMode::AllRegion).unwrap();
            let expected = id / (tech.device.n_slope * THERMAL_VOLTAGE) * 2.0
                / (1.0 + (1.0 + 4.0 * ic).sqrt());
            assert!((p.gm - expected).abs() / expected < 1e-12, "ic={ic}");
            assert!((p.ic - ic).abs() / ic < 1e-12);
        }
    }

    #[test]
    fn strong_inversion_approaches_square_root_law() {
        let mut tech = card();
        tech.device.theta = 0.0;
        let l = 120e-9;
        let n_ut = tech.device.n_slope * THERMAL_VOLTAGE;
        tech.device.k_gm = (tech.device.i0_spec / l).sqrt() / n_ut;
        let w1 = 32e-6;
        let id = 100.0 * tech.device.i0_spec * w1 / l;
        let all = device_point(w1, l, id, &tech, DeviceMode::AllRegion).unwrap();
        let simple = device_point(w1, l, id, &tech, DeviceMode::Simplified).unwrap();
        let rel = (all.gm - simple.gm).abs() / simple.gm;
        assert!(rel < 0.05, "rel = {rel}");
    }

    #[test]
    fn forward_current_reproduces_bias() {
        let tech = card();
        let p = device_point(48e-6, 120e-9, 0.5e-3, &tech, DeviceMode::AllRegion).unwrap();
        let id = drain_current(p.vgt, p.w1, p.l_ch, &tech);
        assert!((id - 0.5e-3).abs() / 0.5e-3 < 1e-12);
    }

    #[test]
    fn g1_equals_gm() {
        let tech = card();
        let p = device_point(48e-6, 120e-9, 0.5e-3, &tech, DeviceMode::AllRegion).unwrap();
        let g = gm_derivatives(&p, &tech).unwrap();
        assert!((g.g1 - p.gm).abs() / p.gm < 1e-6);
    }

    #[test]
    fn derivatives_need_all_region_mode() {
        let tech = card();
        let p = device_point(48e-6, 120e-9, 0.5e-3, &tech, DeviceMode::Simplified).unwrap();
        assert_eq!(gm_derivatives(&p, &tech), Err(DeviceError::ModeUnsupported));
    }

    fn at_ic(ic: f64, tech: &TechnologyCard) -> DevicePoint {
        let w1 = 32e-6;
        let id = ic * tech.device.i0_spec * w1 / 120e-9;
        device_point(w1, 120e-9, id, tech, DeviceMode::AllRegion).unwrap()
    }

    /// Central-difference third derivative of the forward current.
    fn fd_g3(p: &DevicePoint, tech: &TechnologyCard, h: f64) -> f64 {
        let i = |v: f64| drain_current(v, p.w1, p.l_ch, tech);
        let v = p.vgt;
        (i(v + 2.0 * h) - 2.0 * i(v + h) + 2.0 * i(v - h) - i(v - 2.0 * h)) / (2.0 * h * h * h)
    }

    #[test]
    fn third_derivative_sign_in_weak_and_strong_inversion() {
        let tech = card();
        let weak = at_ic(0.01, &tech);
        let strong = at_ic(50.0, &tech);
        let gw = gm_derivatives(&weak, &tech).unwrap().g3;
        let gs = gm_derivatives(&strong, &tech).unwrap().g3;
        assert!(gw > 0.0 && fd_g3(&weak, &tech, 2e-4) > 0.0);
        assert!(gs < 0.0 && fd_g3(&strong, &tech, 2e-4) < 0.0);
    }
    fn fd_g2(p: &DevicePoint, tech: &TechnologyCard, h: f64) -> f64 {
        let i = |v: f64| drain_current(v, p.w1, p.l_ch, tech);
        let v = p.vgt;
        (i(v + h) - 2.0 * i(v) + i(v - h)) / (h * h)
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let tech = card();
        for ic in [0.05, 0.3, 10.0, 30.0] {
            let p = at_ic(ic, &tech);
            let g = gm_derivatives(&p, &tech).unwrap();
            let (d2, d3) = (fd_g2(&p, &tech, 2e-4), fd_g3(&p, &tech, 2e-4));
            assert!(
                (g.g2 - d2).abs() < 1e-4 * g.g2.abs(),
                "ic {ic}: g2 {} vs {d2}",
                g.g2
            );
            assert!(
                (g.g3 - d3).abs() < 1e-4 * g.g3.abs(),
                "ic {ic}: g3 {} vs {d3}",
                g.g3
            );
        }
    }

    #[test]
    fn third_derivative_changes_sign_once() {
        let tech = card();
        let signs: Vec<bool> = (0..=400)
            .map(|k| 0.01 * 10f64.powf(k as f64 * 4.0 / 400.0))
            .map(|ic| gm_derivatives(&at_ic(ic, &tech), &tech).unwrap().g3 > 0.0)
            .collect();
        let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(changes, 1);
        assert!(signs[0]);
    }

    #[test]
    fn gm_rises_with_current() {
        let tech = card();
        let gms: Vec<f64> = [0.1e-3, 0.3e-3, 0.5e-3, 1e-3, 3e-3]
            .iter()
            .map(|&id| {
                device_point(32e-6, 120e-9, id, &tech, DeviceMode::AllRegion)
                    .unwrap()
                    .gm
            })
            .collect();
        assert!(gms.windows(2).all(|w| w[1] > w[0]), "{gms:?}");
    }

    #[test]
    fn longer_channel_lowers_transit_frequency() {
        let tech = card();
        let short = device_point(64e-6, 120e-9, 0.5e-3, &tech, DeviceMode::AllRegion).unwrap();
        let long = device_point(64e-6, 240e-9, 0.5e-3, &tech, DeviceMode::AllRegion).unwrap();
        assert!(long.ft < short.ft);
    }
}
