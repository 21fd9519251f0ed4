//! Passive synthesis for one (gain, bias, width) point.
//!
//! The flow is seed, refine, snap, verify:
//!
//! 1. The seed solves the lossless equations in closed form: the transconductance
//!    needed for the gain target, the degeneration inductor that produces it,
//!    the gate-source capacitance that resonates with Lg + Ls, and an exact
//!    tapped-capacitor divider that matches the drain tank to the load.
//! 2. Refinement runs damped Newton on (Ls, Cx, Lg) against the full-mode
//!    network with inductor losses taken from the library's quality frontier.
//! 3. Inductors snap to library members, Cx is re-tuned for resonance and the
//!    design is re-verified across the band.
//!
//! Any limit violation along the way is recorded in the verdict rather than
//! raised as an error.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inductors::{self, DrainPolicy, InductorError, InductorSpec, QualityFrontier};
use crate::mosmodel::{device_point, DeviceError, DeviceMode, DevicePoint};
use crate::netsolver::{match_output_divider, Circuit, EvalMode, Metrics, PassiveSet};
use crate::techcard::{Limit, TechnologyCard};

/// Negative Cx down to this magnitude (F) is rounding noise and clamps to zero.
pub const CX_CLAMP: f64 = 0.02e-12;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Inductor(#[from] InductorError),
    #[error("output conductance must be positive, got {0} S")]
    NonPositiveOutputConductance(f64),
    #[error("drain tank cannot be matched to the load with a capacitive divider")]
    OutputUnmatchable,
    #[error("refinement did not converge after {iterations} iterations")]
    NoConverge {
        iterations: usize,
        last: Box<PassiveSet>,
    },
}

/// What one synthesis run must achieve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthTarget {
    pub gain_db: f64,
    pub gain_tol_db: f64,
    pub id: f64,
    pub w1: f64,
    pub l_ch: f64,
    /// S11 and S22 must stay at or below this across the band (dB).
    pub match_floor_db: f64,
}

impl SynthTarget {
    pub fn new(gain_db: f64, id: f64, w1: f64, l_ch: f64) -> Self {
        Self {
            gain_db,
            gain_tol_db: 0.5,
            id,
            w1,
            l_ch,
            match_floor_db: -15.0,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !self.gain_db.is_finite() {
            return Err(SynthError::InvalidTarget(format!(
                "gain {} dB",
                self.gain_db
            )));
        }
        if !(self.gain_tol_db > 0.0) {
            return Err(SynthError::InvalidTarget(format!(
                "gain tolerance must be > 0, got {}",
                self.gain_tol_db
            )));
        }
        if !(self.match_floor_db < -10.0) {
            return Err(SynthError::InvalidTarget(format!(
                "match floor must be below -10 dB, got {}",
                self.match_floor_db
            )));
        }
        for (name, v) in [("id", self.id), ("w1", self.w1), ("l_ch", self.l_ch)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SynthError::InvalidTarget(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    fn gain_linear(&self) -> f64 {
        10f64.powf(self.gain_db / 10.0)
    }
}

/// Why a point is infeasible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Binding {
    LsMin,
    LgMax,
    CxMin,
    CMax,
    NoConverge,
}

impl From<Limit> for Binding {
    fn from(l: Limit) -> Self {
        match l {
            Limit::LsMin => Binding::LsMin,
            Limit::LgMax => Binding::LgMax,
            Limit::CxMin => Binding::CxMin,
            Limit::CMax => Binding::CMax,
        }
    }
}

impl Binding {
    pub const ALL: [Binding; 5] = [
        Binding::LsMin,
        Binding::LgMax,
        Binding::CxMin,
        Binding::CMax,
        Binding::NoConverge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Binding::LsMin => "LsMin",
            Binding::LgMax => "LgMax",
            Binding::CxMin => "CxMin",
            Binding::CMax => "CMax",
            Binding::NoConverge => "NoConverge",
        }
    }

    pub fn parse(s: &str) -> Option<Binding> {
        Binding::ALL.into_iter().find(|b| b.name() == s)
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Feasible,
    Infeasible,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Feasible => "feasible",
            Status::Infeasible => "infeasible",
        })
    }
}

/// Signed distance to each limit; negative means violated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    /// ls − ls_min (H).
    pub ls: f64,
    /// lg_max − lg (H).
    pub lg: f64,
    /// cx − cx_min (F).
    pub cx: f64,
    /// c_max − largest capacitor (F).
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityVerdict {
    pub status: Status,
    pub binding: BTreeSet<Binding>,
    pub margin: Margins,
}

impl FeasibilityVerdict {
    pub fn is_feasible(&self) -> bool {
        self.status == Status::Feasible
    }

    fn with_extra(mut self, b: Binding) -> Self {
        self.binding.insert(b);
        self.status = Status::Infeasible;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignCandidate {
    pub target: SynthTarget,
    pub device: DevicePoint,
    pub passives: PassiveSet,
    /// Full-mode metrics at f0; only present for feasible designs.
    pub metrics: Option<Metrics>,
    pub verdict: FeasibilityVerdict,
}

/// Compare passive values against the technology limits.
pub fn classify(p: &PassiveSet, tech: &TechnologyCard) -> FeasibilityVerdict {
    let lim = &tech.limits;
    let c_largest = p.capacitors().into_iter().fold(f64::NEG_INFINITY, f64::max);
    let margin = Margins {
        ls: p.ls.l - lim.ls_min,
        lg: lim.lg_max - p.lg.l,
        cx: p.cx - lim.cx_min,
        c: lim.c_max - c_largest,
    };
    let mut binding = BTreeSet::new();
    // The minimum realizable inductance applies to Lg as well.
    if !(p.ls.l >= lim.ls_min && p.lg.l >= lim.ls_min) {
        binding.insert(Binding::LsMin);
    }
    if !(p.lg.l <= lim.lg_max) {
        binding.insert(Binding::LgMax);
    }
    if !(p.cx >= lim.cx_min) {
        binding.insert(Binding::CxMin);
    }
    if !(c_largest <= lim.c_max) {
        binding.insert(Binding::CMax);
    }
    let status = if binding.is_empty() {
        Status::Feasible
    } else {
        Status::Infeasible
    };
    FeasibilityVerdict {
        status,
        binding,
        margin,
    }
}

fn clamp_cx(mut p: PassiveSet) -> PassiveSet {
    if p.cx < 0.0 && p.cx >= -CX_CLAMP {
        p.cx = 0.0;
    }
    p
}

fn divider_for(
    passives: &PassiveSet,
    tech: &TechnologyCard,
    device: &DevicePoint,
    mode: EvalMode,
) -> Result<(f64, f64), SynthError> {
    let circuit = Circuit::new(tech, device, passives);
    let omega = tech.omega0();
    let y_tank = circuit.tank_admittance(omega, mode);
    match_output_divider(y_tank, omega, tech.general.rl).ok_or(SynthError::OutputUnmatchable)
}

/// Closed-form lossless solution. Cx may come out negative; Lg may come out
/// non-positive when cgs + Cx alone exceeds the resonance capacitance.
pub fn seed_passives(
    target: &SynthTarget,
    tech: &TechnologyCard,
    ld: &InductorSpec,
    device: &DevicePoint,
) -> Result<PassiveSet, SynthError> {
    target.validate()?;
    let g_o = if ld.r_parallel.is_finite() {
        1.0 / ld.r_parallel
    } else {
        0.0
    };
    if !(g_o > 0.0) {
        return Err(SynthError::NonPositiveOutputConductance(g_o));
    }
    let rs = tech.general.rs;
    let w0 = tech.omega0();
    let big_gm = (target.gain_linear() * g_o / rs).sqrt();
    let ls = 1.0 / (2.0 * w0 * big_gm);
    let c_t = device.gm * ls / rs;
    let cx = c_t - device.cgs;
    let lg = 1.0 / (w0 * w0 * c_t) - ls;
    let mut passives = PassiveSet {
        ls: InductorSpec::ideal(ls),
        lg: InductorSpec::ideal(lg),
        cx,
        ld: *ld,
        c1: 0.0,
        cp: 0.0,
    };
    let (c1, cp) = divider_for(&passives, tech, device, EvalMode::Ideal)?;
    passives.c1 = c1;
    passives.cp = cp;
    Ok(passives)
}

const MAX_ITER: usize = 200;

/// Loss fractions of the refinement continuation.
const LOSS_STEPS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 || !m[piv][col].is_finite() {
            return None;
        }
        m.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..4 {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

/// Refinement: turns (ls, cx, lg) into passives and evaluates residuals.
struct Refiner<'a> {
    target: &'a SynthTarget,
    tech: &'a TechnologyCard,
    device: &'a DevicePoint,
    mode: EvalMode,
    frontier: Option<&'a QualityFrontier>,
    /// Fraction of the frontier losses applied (0 = lossless, 1 = full).
    loss_scale: f64,
    base: PassiveSet,
}

impl Refiner<'_> {
    fn inductor(&self, l: f64) -> InductorSpec {
        match (self.mode, self.frontier) {
            (EvalMode::Full, Some(fr)) if self.loss_scale > 0.0 => {
                InductorSpec::with_q(l, fr.q_at(l) / self.loss_scale, self.tech.omega0())
            }
            _ => InductorSpec::ideal(l),
        }
    }

    fn build(&self, x: [f64; 3]) -> PassiveSet {
        PassiveSet {
            ls: self.inductor(x[0]),
            cx: x[1],
            lg: self.inductor(x[2]),
            ..self.base
        }
    }

    fn residuals(&self, x: [f64; 3]) -> [f64; 3] {
        let p = self.build(x);
        let c = Circuit::new(self.tech, self.device, &p);
        let f0 = self.tech.general.f0;
        let rs = self.tech.general.rs;
        let z = c.input_impedance(f0, self.mode);
        let g = c.gain(f0, self.mode);
        [
            (z.re - rs) / rs,
            z.im / rs,
            (g - self.target.gain_db) / self.target.gain_tol_db,
        ]
    }

    fn converged(&self, r: [f64; 3]) -> bool {
        let gamma_floor = 10f64.powf(self.target.match_floor_db / 20.0);
        r[0].hypot(r[1]) < 1e-3 * gamma_floor && r[2].abs() < 1e-3
    }
}

fn norm(r: [f64; 3]) -> f64 {
    (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
}

/// Damped Newton on (Ls, Cx, Lg) so that Zin(f0) = Rs and the gain meets the
/// target under `mode`, then re-solve the output divider. With no frontier,
/// inductors stay lossless.
pub fn refine_passives(
    seed: &PassiveSet,
    target: &SynthTarget,
    tech: &TechnologyCard,
    device: &DevicePoint,
    mode: EvalMode,
    frontier: Option<&QualityFrontier>,
) -> Result<PassiveSet, SynthError> {
    refine_scaled(seed, target, tech, device, mode, frontier, 1.0)
}

fn refine_scaled(
    seed: &PassiveSet,
    target: &SynthTarget,
    tech: &TechnologyCard,
    device: &DevicePoint,
    mode: EvalMode,
    frontier: Option<&QualityFrontier>,
    loss_scale: f64,
) -> Result<PassiveSet, SynthError> {
    let refiner = Refiner {
        target,
        tech,
        device,
        mode,
        frontier,
        loss_scale,
        base: *seed,
    };
    let mut x = [seed.ls.l, seed.cx, seed.lg.l];
    let fail = |x: [f64; 3], iterations| SynthError::NoConverge {
        iterations,
        last: Box::new(refiner.build(x)),
    };
    if !(x[0] > 0.0 && x[2] > 0.0) {
        return Err(fail(x, 0));
    }
    let mut r = refiner.residuals(x);
    let mut iter = 0;
    while !refiner.converged(r) {
        if iter == MAX_ITER || !r.iter().all(|v| v.is_finite()) {
            return Err(fail(x, iter));
        }
        iter += 1;
        let scale = [x[0].abs(), x[1].abs().max(device.cgs), x[2].abs()];
        let mut jac = [[0.0; 3]; 3];
        for k in 0..3 {
            let h = 1e-7 * scale[k];
            let mut xp = x;
            xp[k] += h;
            let rp = refiner.residuals(xp);
            for i in 0..3 {
                jac[i][k] = (rp[i] - r[i]) / h;
            }
        }
        let Some(dx) = solve3(jac, [-r[0], -r[1], -r[2]]) else {
            return Err(fail(x, iter));
        };
        let base_norm = norm(r);
        let mut lambda = 1.0;
        let mut accepted = None;
        while lambda >= 1.0 / 1024.0 {
            let xn = [
                x[0] + lambda * dx[0],
                x[1] + lambda * dx[1],
                x[2] + lambda * dx[2],
            ];
            if xn[0] > 0.0 && xn[2] > 0.0 {
                let rn = refiner.residuals(xn);
                if norm(rn) < base_norm {
                    accepted = Some((xn, rn));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((xn, rn)) = accepted else {
            return Err(fail(x, iter));
        };
        x = xn;
        r = rn;
    }
    let mut out = refiner.build(x);
    let (c1, cp) = divider_for(&out, tech, device, mode)?;
    out.c1 = c1;
    out.cp = cp;
    Ok(out)
}

/// 1-D Newton on Cx so that Im{Zin(f0)} = 0 with the inductors held fixed.
fn retune_cx(
    p: &PassiveSet,
    tech: &TechnologyCard,
    device: &DevicePoint,
    mode: EvalMode,
) -> Option<PassiveSet> {
    let f0 = tech.general.f0;
    let im = |cx: f64| {
        let q = PassiveSet { cx, ..*p };
        Circuit::new(tech, device, &q).input_impedance(f0, mode).im
    };
    let mut cx = p.cx;
    let tol = 1e-6 * tech.general.rs;
    for _ in 0..MAX_ITER {
        let v = im(cx);
        if v.abs() < tol {
            return Some(PassiveSet { cx, ..*p });
        }
        let h = 1e-7 * cx.abs().max(device.cgs);
        let d = (im(cx + h) - v) / h;
        if !(d.is_finite() && d != 0.0) {
            return None;
        }
        cx -= v / d;
    }
    None
}

/// Full-mode band check: S11 and S22 at the band edges and centre, gain at f0.
pub fn meets_band(
    p: &PassiveSet,
    target: &SynthTarget,
    tech: &TechnologyCard,
    device: &DevicePoint,
) -> bool {
    let c = Circuit::new(tech, device, p);
    let g = &tech.general;
    let gain_ok = (c.gain(g.f0, EvalMode::Full) - target.gain_db).abs() <= target.gain_tol_db;
    gain_ok
        && [g.band_lo, g.f0, g.band_hi].into_iter().all(|f| {
            let (s11, s22) = c.s_parameters(f, EvalMode::Full);
            s11 <= target.match_floor_db && s22 <= target.match_floor_db
        })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    pub device_mode: DeviceMode,
    /// Largest relative distance from a requested inductance to the library member it snaps to.
    pub snap_tolerance: f64,
    pub drain: DrainPolicy,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            device_mode: DeviceMode::AllRegion,
            snap_tolerance: 0.15,
            drain: DrainPolicy::default(),
        }
    }
}

/// Per-technology state shared by every synthesis run: the spiral library, its
/// quality frontier and the chosen drain inductor.
#[derive(Debug, Clone)]
pub struct Synthesizer {
    tech: TechnologyCard,
    library: Vec<InductorSpec>,
    frontier: QualityFrontier,
    ld: InductorSpec,
    options: SynthOptions,
}

impl Synthesizer {
    pub fn new(tech: &TechnologyCard, options: SynthOptions) -> Result<Self, SynthError> {
        let library = inductors::build_library(tech)?;
        Self::with_library(tech, library, options)
    }

    pub fn with_library(
        tech: &TechnologyCard,
        library: Vec<InductorSpec>,
        options: SynthOptions,
    ) -> Result<Self, SynthError> {
        let frontier = QualityFrontier::new(&library, tech)?;
        let ld = inductors::select_drain_inductor(&library, &options.drain)?;
        Ok(Self {
            tech: tech.clone(),
            library,
            frontier,
            ld,
            options,
        })
    }

    pub fn tech(&self) -> &TechnologyCard {
        &self.tech
    }

    pub fn library(&self) -> &[InductorSpec] {
        &self.library
    }

    pub fn frontier(&self) -> &QualityFrontier {
        &self.frontier
    }

    pub fn drain_inductor(&self) -> &InductorSpec {
        &self.ld
    }

    fn snap(&self, l: f64, role: Limit) -> Result<InductorSpec, Binding> {
        self.frontier
            .snap(l, self.options.snap_tolerance, &self.tech)
            .map_err(|e| match e {
                InductorError::LimitViolation { limit, .. } => limit.into(),
                _ => role.into(),
            })
    }

    pub fn synthesize(&self, target: &SynthTarget) -> Result<DesignCandidate, SynthError> {
        target.validate()?;
        let tech = &self.tech;
        let device = device_point(
            target.w1,
            target.l_ch,
            target.id,
            tech,
            self.options.device_mode,
        )?;
        let seed = seed_passives(target, tech, &self.ld, &device)?;
        let candidate = |passives: PassiveSet, metrics, verdict| DesignCandidate {
            target: *target,
            device,
            passives,
            metrics,
            verdict,
        };

        // A lossless design that already violates a limit cannot be rescued
        // by adding losses; report the lossless reason.
        let seed_verdict = classify(&clamp_cx(seed), tech);
        if !seed_verdict.is_feasible() {
            return Ok(candidate(clamp_cx(seed), None, seed_verdict));
        }

        // Losses are introduced in steps, each solve warm-started from the
        // last. The first step at which a limit is crossed names the binding
        // limits, so a limit reached only as a side effect of an already
        // unrealizable element is not reported.
        let mut refined = seed;
        for &scale in &LOSS_STEPS {
            let step = refine_scaled(
                &refined,
                target,
                tech,
                &device,
                EvalMode::Full,
                Some(&self.frontier),
                scale,
            );
            refined = match step {
                Ok(p) => clamp_cx(p),
                Err(SynthError::NoConverge { last, .. }) => {
                    // A solver pushed past a limit names that limit; otherwise
                    // the failure itself is the reason.
                    let last = clamp_cx(*last);
                    let verdict = classify(&last, tech);
                    let verdict = if verdict.is_feasible() {
                        verdict.with_extra(Binding::NoConverge)
                    } else {
                        verdict
                    };
                    return Ok(candidate(last, None, verdict));
                }
                Err(SynthError::OutputUnmatchable) => {
                    let verdict = classify(&refined, tech).with_extra(Binding::NoConverge);
                    return Ok(candidate(refined, None, verdict));
                }
                Err(e) => return Err(e),
            };
            let verdict = classify(&refined, tech);
            if !verdict.is_feasible() {
                return Ok(candidate(refined, None, verdict));
            }
        }
        let verdict = classify(&refined, tech);

        let snapped_ls = self.snap(refined.ls.l, Limit::LsMin);
        let snapped_lg = self.snap(refined.lg.l, Limit::LgMax);
        let (ls, lg) = match (snapped_ls, snapped_lg) {
            (Ok(ls), Ok(lg)) => (ls, lg),
            (a, b) => {
                let mut verdict = verdict;
                for b in [a.err(), b.err()].into_iter().flatten() {
                    verdict = verdict.with_extra(b);
                }
                return Ok(candidate(refined, None, verdict));
            }
        };
        let snapped = PassiveSet { ls, lg, ..refined };
        let Some(tuned) = retune_cx(&snapped, tech, &device, EvalMode::Full).map(clamp_cx) else {
            let verdict = classify(&snapped, tech).with_extra(Binding::NoConverge);
            return Ok(candidate(snapped, None, verdict));
        };
        let verdict = classify(&tuned, tech);
        if !verdict.is_feasible() {
            return Ok(candidate(tuned, None, verdict));
        }
        if !meets_band(&tuned, target, tech, &device) {
            return Ok(candidate(
                tuned,
                None,
                verdict.with_extra(Binding::NoConverge),
            ));
        }
        let metrics = Circuit::new(tech, &device, &tuned).evaluate(tech.general.f0, EvalMode::Full);
        Ok(candidate(tuned, Some(metrics), verdict))
    }
}

/// One-shot synthesis with the default options. Builds the spiral library on
/// every call; sweeps should hold a [`Synthesizer`] instead.
pub fn synthesize(
    target: &SynthTarget,
    tech: &TechnologyCard,
) -> Result<DesignCandidate, SynthError> {
    Synthesizer::new(tech, SynthOptions::default())?.synthesize(target)
}
