//! Octagonal spiral inductors: closed-form inductance and loss models, the
//! realizable library, and the selection rules used by synthesis.
//!
//! Inductance uses the current-sheet approximation with octagon coefficients.
//! Loss is conductor resistance with a skin-depth correction plus a scalar
//! substrate term folded into 1/Q.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parallel;
use crate::techcard::{Limit, TechnologyCard};

const MU0: f64 = 4.0e-7 * PI;

// Current-sheet coefficients for octagonal spirals.
const C1: f64 = 1.07;
const C2: f64 = 2.29;
const C3: f64 = 0.0;
const C4: f64 = 0.19;

/// Library points must keep the spiral hollow: inner diameter ≥ this fraction of od.
pub const MIN_HOLLOWNESS: f64 = 0.2;

/// Bin width of the Q-versus-L envelope used for plotting and inspection (H).
pub const ENVELOPE_BIN_WIDTH: f64 = 0.5e-9;

/// Relative bin ratio of the fine envelope used when snapping synthesized values.
pub const FRONTIER_BIN_RATIO: f64 = 1.02;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InductorError {
    #[error("number of turns {0} is below a quarter turn or not a multiple of 1/4")]
    Turns(f64),
    #[error("unrealizable geometry: {0}")]
    Unrealizable(String),
    #[error("geometry grid is empty")]
    EmptyGrid,
    #[error("inductor library is empty")]
    EmptyLibrary,
    #[error("requested inductance {requested} H violates {limit}")]
    LimitViolation { limit: Limit, requested: f64 },
    #[error("no library member within tolerance of {requested} H")]
    NoneWithinTolerance { requested: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InductorGeometry {
    /// Number of turns, quarter-turn granularity.
    pub nt: f64,
    /// Outer diameter (m).
    pub od: f64,
    /// Trace width (m).
    pub w: f64,
    /// Turn spacing (m).
    pub s: f64,
}

impl InductorGeometry {
    pub fn new(nt: f64, od: f64, w: f64, s: f64) -> Result<Self, InductorError> {
        let geom = Self { nt, od, w, s };
        geom.check()?;
        Ok(geom)
    }

    pub fn check(&self) -> Result<(), InductorError> {
        let quarters = self.nt * 4.0;
        if !(self.nt >= 0.25) || (quarters - quarters.round()).abs() > 1e-9 {
            return Err(InductorError::Turns(self.nt));
        }
        if !(self.w > 0.0) || !(self.s >= 0.0) {
            return Err(InductorError::Unrealizable(format!(
                "trace width {} and spacing {} must be positive",
                self.w, self.s
            )));
        }
        if !(self.od > 2.0 * self.nt * (self.w + self.s)) {
            return Err(InductorError::Unrealizable(format!(
                "od {} too small for {} turns of width {} and spacing {}",
                self.od, self.nt, self.w, self.s
            )));
        }
        Ok(())
    }

    pub fn inner_diameter(&self) -> f64 {
        self.od - 2.0 * self.nt * self.w - 2.0 * (self.nt - 1.0) * self.s
    }

    pub fn mean_diameter(&self) -> f64 {
        0.5 * (self.od + self.inner_diameter())
    }

    pub fn fill_ratio(&self) -> f64 {
        let din = self.inner_diameter();
        (self.od - din) / (self.od + din)
    }

    /// Total trace length, taken along the mean octagon.
    pub fn trace_length(&self) -> f64 {
        self.nt * 8.0 * (PI / 8.0).tan() * self.mean_diameter()
    }
}

/// Current-sheet inductance of an octagonal spiral (H).
pub fn inductance_of(geom: &InductorGeometry) -> Result<f64, InductorError> {
    geom.check()?;
    let rho = geom.fill_ratio();
    let davg = geom.mean_diameter();
    let l =
        MU0 * geom.nt * geom.nt * davg * C1 / 2.0 * ((C2 / rho).ln() + C3 * rho + C4 * rho * rho);
    if l > 0.0 && l.is_finite() {
        Ok(l)
    } else {
        Err(InductorError::Unrealizable(format!(
            "non-positive inductance for {geom:?}"
        )))
    }
}

/// Skin depth of the spiral metal at frequency `f`.
fn skin_depth(f: f64, tech: &TechnologyCard) -> f64 {
    (tech.passives.metal_resistivity / (PI * f * MU0)).sqrt()
}

/// Conductor series resistance at frequency `f` (Ω).
pub fn series_resistance(
    geom: &InductorGeometry,
    f: f64,
    tech: &TechnologyCard,
) -> Result<f64, InductorError> {
    geom.check()?;
    let r_dc = tech.passives.sheet_res * geom.trace_length() / geom.w;
    let skin = (geom.w / (2.0 * skin_depth(f, tech))).max(1.0);
    Ok(r_dc * skin)
}

/// Quality factor at frequency `f`, conductor and substrate losses combined.
pub fn q_of(geom: &InductorGeometry, f: f64, tech: &TechnologyCard) -> Result<f64, InductorError> {
    let l = inductance_of(geom)?;
    let r = series_resistance(geom, f, tech)?;
    let q_series = 2.0 * PI * f * l / r;
    let inv_q = 1.0 / q_series + tech.passives.sub_loss_k * (f / tech.general.f0);
    Ok(1.0 / inv_q)
}

/// An inductor as seen by the circuit: value and losses at the operating frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InductorSpec {
    /// Layout, when the inductor is a library member.
    pub geometry: Option<InductorGeometry>,
    /// Inductance (H).
    pub l: f64,
    /// Quality factor at f0.
    pub q: f64,
    /// Conductor series resistance at f0 (Ω).
    pub r_series: f64,
    /// Equivalent parallel resistance ω0·L·Q (Ω).
    pub r_parallel: f64,
}

impl InductorSpec {
    pub fn from_geometry(
        geom: InductorGeometry,
        tech: &TechnologyCard,
    ) -> Result<Self, InductorError> {
        let f0 = tech.general.f0;
        let l = inductance_of(&geom)?;
        let q = q_of(&geom, f0, tech)?;
        let r_series = series_resistance(&geom, f0, tech)?;
        Ok(Self {
            geometry: Some(geom),
            l,
            q,
            r_series,
            r_parallel: tech.omega0() * l * q,
        })
    }

    /// A lossless inductor.
    pub fn ideal(l: f64) -> Self {
        Self {
            geometry: None,
            l,
            q: f64::INFINITY,
            r_series: 0.0,
            r_parallel: f64::INFINITY,
        }
    }

    /// An inductor characterized only by its value and quality factor.
    pub fn with_q(l: f64, q: f64, omega0: f64) -> Self {
        Self {
            geometry: None,
            l,
            q,
            r_series: omega0 * l / q,
            r_parallel: omega0 * l * q,
        }
    }

    /// Series resistance equivalent to all losses at `omega0` (ω0·L/Q).
    pub fn loss_resistance(&self, omega0: f64) -> f64 {
        if self.q.is_infinite() {
            0.0
        } else {
            omega0 * self.l / self.q
        }
    }

    pub fn is_lossless(&self) -> bool {
        self.q.is_infinite()
    }

    /// Same inductor with its losses removed.
    pub fn lossless(&self) -> Self {
        Self {
            q: f64::INFINITY,
            r_series: 0.0,
            r_parallel: f64::INFINITY,
            ..*self
        }
    }
}

fn grid(min: f64, max: f64, step: f64) -> Vec<f64> {
    let n = ((max - min) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| min + k as f64 * step).collect()
}

/// Every grid geometry of the technology that is realizable and hollow enough.
pub fn library_geometries(tech: &TechnologyCard) -> Vec<InductorGeometry> {
    let lim = &tech.limits;
    let turns = grid(lim.nt_min, lim.nt_max, 0.25);
    let ods = grid(lim.od_min, lim.od_max, lim.od_step);
    let widths = grid(lim.w_min, lim.w_max, lim.w_step);
    let mut out = Vec::new();
    for &nt in &turns {
        for &od in &ods {
            for &w in &widths {
                if let Ok(geom) = InductorGeometry::new(nt, od, w, lim.spacing) {
                    if geom.inner_diameter() >= MIN_HOLLOWNESS * od {
                        out.push(geom);
                    }
                }
            }
        }
    }
    out
}

/// Evaluate every realizable grid point; unrealizable points are skipped.
pub fn build_library(tech: &TechnologyCard) -> Result<Vec<InductorSpec>, InductorError> {
    let geoms = library_geometries(tech);
    if geoms.is_empty() {
        return Err(InductorError::EmptyGrid);
    }
    let specs: Vec<InductorSpec> =
        parallel::map(&geoms, |g| InductorSpec::from_geometry(*g, tech).ok())
            .into_iter()
            .flatten()
            .collect();
    if specs.is_empty() {
        return Err(InductorError::EmptyGrid);
    }
    Ok(specs)
}

/// Column order of the library export.
pub const LIBRARY_COLUMNS: [&str; 8] = ["nt", "od", "w", "s", "L", "Q", "r_series", "r_parallel"];

/// Write library members as CSV, one geometry per row. Members without a
/// geometry are skipped.
pub fn write_library_csv<W: std::io::Write>(lib: &[InductorSpec], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LIBRARY_COLUMNS)?;
    for spec in lib {
        if let Some(g) = spec.geometry {
            w.write_record(
                [
                    g.nt,
                    g.od,
                    g.w,
                    g.s,
                    spec.l,
                    spec.q,
                    spec.r_series,
                    spec.r_parallel,
                ]
                .map(crate::explorer::format_f64),
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Bin edges of constant width covering `[lo, hi]`.
pub fn linear_bins(lo: f64, hi: f64, width: f64) -> Vec<f64> {
    let start = (lo / width).floor() * width;
    let n = ((hi - start) / width).ceil() as usize + 1;
    (0..=n).map(|k| start + k as f64 * width).collect()
}

/// Bin edges with a constant ratio covering `[lo, hi]`.
pub fn geometric_bins(lo: f64, hi: f64, ratio: f64) -> Vec<f64> {
    let mut edges = vec![lo];
    while *edges.last().unwrap() <= hi {
        let next = edges.last().unwrap() * ratio;
        edges.push(next);
    }
    edges
}

fn bin_index(edges: &[f64], x: f64) -> Option<usize> {
    if edges.len() < 2 || x < edges[0] || x >= edges[edges.len() - 1] {
        return None;
    }
    Some(edges.partition_point(|&e| e <= x) - 1)
}

fn envelope_by<K, B>(
    lib: &[InductorSpec],
    edges: &[f64],
    key: K,
    better: B,
) -> Result<Vec<InductorSpec>, InductorError>
where
    K: Fn(&InductorSpec) -> f64,
    B: Fn(&InductorSpec, &InductorSpec) -> bool,
{
    if lib.is_empty() {
        return Err(InductorError::EmptyLibrary);
    }
    let mut best: Vec<Option<InductorSpec>> = vec![None; edges.len().saturating_sub(1)];
    for spec in lib {
        if let Some(i) = bin_index(edges, key(spec)) {
            match &best[i] {
                Some(cur) if !better(spec, cur) => {}
                _ => best[i] = Some(*spec),
            }
        }
    }
    let mut out: Vec<InductorSpec> = best.into_iter().flatten().collect();
    out.sort_by(|a, b| a.l.total_cmp(&b.l));
    Ok(out)
}

/// Highest-Q member of each inductance bin, sorted by inductance.
pub fn max_q_envelope(
    lib: &[InductorSpec],
    bins: &[f64],
) -> Result<Vec<InductorSpec>, InductorError> {
    envelope_by(
        lib,
        bins,
        |s| s.l,
        |a, b| a.q > b.q || (a.q == b.q && a.l < b.l),
    )
}

/// Lowest-Q member of each parallel-resistance bin, sorted by inductance.
pub fn min_q_envelope(
    lib: &[InductorSpec],
    bins: &[f64],
) -> Result<Vec<InductorSpec>, InductorError> {
    envelope_by(
        lib,
        bins,
        |s| s.r_parallel,
        |a, b| a.q < b.q || (a.q == b.q && a.l < b.l),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrainPolicy {
    pub r_parallel_target: f64,
    /// Bin ratio of the lowest-Q envelope over parallel resistance.
    pub r_bin_ratio: f64,
}

impl Default for DrainPolicy {
    fn default() -> Self {
        Self {
            r_parallel_target: 2.0e3,
            r_bin_ratio: 1.1,
        }
    }
}

fn nearest_by(
    cands: &[InductorSpec],
    key: impl Fn(&InductorSpec) -> f64,
    target: f64,
) -> Option<InductorSpec> {
    cands.iter().copied().min_by(|a, b| {
        let da = (key(a) - target).abs();
        let db = (key(b) - target).abs();
        da.total_cmp(&db).then(a.l.total_cmp(&b.l))
    })
}

/// Drain inductor: member of the lowest-Q envelope whose parallel resistance is
/// nearest the target. Ties go to the smaller inductance.
pub fn select_drain_inductor(
    lib: &[InductorSpec],
    policy: &DrainPolicy,
) -> Result<InductorSpec, InductorError> {
    if lib.is_empty() {
        return Err(InductorError::EmptyLibrary);
    }
    let lo = lib
        .iter()
        .map(|s| s.r_parallel)
        .fold(f64::INFINITY, f64::min);
    let hi = lib.iter().map(|s| s.r_parallel).fold(0.0, f64::max);
    let edges = geometric_bins(lo, hi, policy.r_bin_ratio);
    let envelope = min_q_envelope(lib, &edges)?;
    nearest_by(&envelope, |s| s.r_parallel, policy.r_parallel_target)
        .ok_or(InductorError::EmptyLibrary)
}

/// Envelope member nearest `l_target`; ties go to the smaller inductance.
pub fn nearest_inductor(
    envelope: &[InductorSpec],
    l_target: f64,
    tech: &TechnologyCard,
) -> Result<InductorSpec, InductorError> {
    if l_target < tech.limits.ls_min {
        return Err(InductorError::LimitViolation {
            limit: Limit::LsMin,
            requested: l_target,
        });
    }
    if l_target > tech.limits.lg_max {
        return Err(InductorError::LimitViolation {
            limit: Limit::LgMax,
            requested: l_target,
        });
    }
    nearest_by(envelope, |s| s.l, l_target).ok_or(InductorError::EmptyLibrary)
}

/// Fine max-Q envelope over the whole library. Supplies the quality factor of
/// a continuous inductance during refinement and the discrete member a value
/// snaps to afterwards.
///
/// The envelope itself is jagged (neighbouring members come from different
/// geometries), so the continuous quality factor is a least-squares fit,
/// quadratic in ln L, which keeps the refinement residuals smooth.
#[derive(Debug, Clone)]
pub struct QualityFrontier {
    members: Vec<InductorSpec>,
    omega0: f64,
    fit: [f64; 3],
}

/// Reference inductance for the ln L fit variable.
const FIT_REF: f64 = 1e-9;

fn fit_log_quadratic(members: &[InductorSpec]) -> [f64; 3] {
    let degree = members.len().min(3) - 1;
    let n = degree + 1;
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for m in members {
        let x = (m.l / FIT_REF).ln();
        let basis = [1.0, x, x * x];
        for i in 0..n {
            for j in 0..n {
                ata[i][j] += basis[i] * basis[j];
            }
            atb[i] += basis[i] * m.q;
        }
    }
    // Gauss-Jordan on the n×n normal equations.
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&a, &b| ata[a][col].abs().total_cmp(&ata[b][col].abs()))
            .unwrap_or(col);
        ata.swap(col, piv);
        atb.swap(col, piv);
        let d = ata[col][col];
        if d.abs() < 1e-300 {
            continue;
        }
        for row in 0..n {
            if row != col {
                let f = ata[row][col] / d;
                for k in col..n {
                    ata[row][k] -= f * ata[col][k];
                }
                atb[row] -= f * atb[col];
            }
        }
    }
    let mut c = [0.0; 3];
    for i in 0..n {
        if ata[i][i].abs() >= 1e-300 {
            c[i] = atb[i] / ata[i][i];
        }
    }
    c
}

impl QualityFrontier {
    pub fn new(lib: &[InductorSpec], tech: &TechnologyCard) -> Result<Self, InductorError> {
        if lib.is_empty() {
            return Err(InductorError::EmptyLibrary);
        }
        let lo = lib.iter().map(|s| s.l).fold(f64::INFINITY, f64::min);
        let hi = lib.iter().map(|s| s.l).fold(0.0, f64::max);
        let edges = geometric_bins(lo, hi, FRONTIER_BIN_RATIO);
        let members = max_q_envelope(lib, &edges)?;
        let fit = fit_log_quadratic(&members);
        Ok(Self {
            members,
            omega0: tech.omega0(),
            fit,
        })
    }

    pub fn members(&self) -> &[InductorSpec] {
        &self.members
    }

    /// Fitted quality factor; the fit is held flat outside the library span
    /// and never drops below the lowest member Q.
    pub fn q_at(&self, l: f64) -> f64 {
        let m = &self.members;
        let l = l.clamp(m[0].l, m[m.len() - 1].l);
        let x = (l / FIT_REF).ln();
        let q_floor = m.iter().map(|s| s.q).fold(f64::INFINITY, f64::min);
        (self.fit[0] + self.fit[1] * x + self.fit[2] * x * x).max(q_floor)
    }

    /// A continuous-valued inductor carrying the frontier quality factor.
    pub fn lossy(&self, l: f64) -> InductorSpec {
        InductorSpec::with_q(l, self.q_at(l), self.omega0)
    }

    /// Snap to the nearest frontier member, rejecting values outside the limits
    /// or farther than `rel_tol` from any member.
    pub fn snap(
        &self,
        l: f64,
        rel_tol: f64,
        tech: &TechnologyCard,
    ) -> Result<InductorSpec, InductorError> {
        let chosen = nearest_inductor(&self.members, l, tech)?;
        if (chosen.l - l).abs() > rel_tol * l {
            return Err(InductorError::NoneWithinTolerance { requested: l });
        }
        Ok(chosen)
    }
}
