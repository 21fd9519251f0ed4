//! Small-signal evaluation of a complete LNA: device point plus passives.
//!
//! The amplifier is a cascade of chain matrices between a source of resistance
//! `rs` and a load `rl`:
//!
//! ```text
//! series Lg ─ shunt Cgb ─ [M1 + Ls + Cgs‖Cx + cascode] ─ shunt (Ld‖Rp‖Y_od) ─ series C1 ─ shunt Cp
//! ```
//!
//! The active core is unilateral (no reverse transmission), so S11 depends only
//! on the input side and S22 only on the output side.
//!
//! `Ideal` mode keeps only cgs, the controlled source gm·vgs, lossless Lg/Ls and
//! the drain-inductor loss. `Full` mode adds Lg/Ls series loss, cgb, cgd coupled
//! to a cascode node loaded by gm2 and its own capacitance, and the cascode
//! output admittance.

mod twoport;

pub use twoport::{Abcd, SParams};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::inductors::InductorSpec;
use crate::mosmodel::{gm_derivatives, DeviceError, DevicePoint};
use crate::techcard::TechnologyCard;

/// Reflection magnitudes are floored here instead of reporting −∞.
pub const S_FLOOR_DB: f64 = -100.0;

/// IIP3 reported when the effective third-order coefficient vanishes.
pub const IIP3_CEILING_DBM: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    Ideal,
    #[default]
    Full,
}

/// The synthesized passives of one design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassiveSet {
    pub ls: InductorSpec,
    pub lg: InductorSpec,
    /// Gate-source shunt capacitor (F). Negative only in unclamped synthesis output.
    pub cx: f64,
    pub ld: InductorSpec,
    pub c1: f64,
    pub cp: f64,
}

impl PassiveSet {
    pub fn capacitors(&self) -> [f64; 3] {
        [self.cx, self.c1, self.cp]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub gain_db: f64,
    pub s11_db: f64,
    pub s22_db: f64,
    pub nf_db: f64,
    /// None when the device model cannot supply third-order coefficients.
    pub iip3_dbm: Option<f64>,
    /// Effective transconductance |I_o/V_s| (S).
    pub gm_eff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascodeOutput {
    /// Small-signal output admittance of the cascode (S).
    pub y_od: Complex64,
    /// Re{Y_od} + 1/R_D (S).
    pub g_o_prime: f64,
}

/// Reflection coefficient magnitude in dB, floored at [`S_FLOOR_DB`].
pub fn reflection_db(gamma: Complex64) -> f64 {
    let mag = gamma.norm();
    if mag == 0.0 {
        S_FLOOR_DB
    } else {
        (20.0 * mag.log10()).max(S_FLOOR_DB)
    }
}

fn jw(omega: f64) -> Complex64 {
    Complex64::new(0.0, omega)
}

fn inductor_impedance(ind: &InductorSpec, omega: f64, omega0: f64, lossy: bool) -> Complex64 {
    let r = if lossy {
        ind.loss_resistance(omega0)
    } else {
        0.0
    };
    Complex64::new(r, omega * ind.l)
}

fn capacitor_impedance(c: f64, omega: f64) -> Complex64 {
    if c > 0.0 {
        1.0 / (jw(omega) * c)
    } else {
        // Absent capacitor: open circuit.
        Complex64::new(0.0, -1e30)
    }
}

/// Exact lossless tapped-capacitor match: series `c1` then shunt `cp` across
/// `rl`, presenting `rl` at the output port when driven by a tank of
/// admittance `y_tank`. None when the tank cannot be matched this way.
pub fn match_output_divider(y_tank: Complex64, omega: f64, rl: f64) -> Option<(f64, f64)> {
    let (g, b) = (y_tank.re, y_tank.im);
    if !(g > 0.0) {
        return None;
    }
    let mag2 = g * g + b * b;
    let q2 = rl * mag2 / g - 1.0;
    if !(q2 > 0.0) {
        return None;
    }
    let q = q2.sqrt();
    let x_c1 = -b / mag2 - rl * q / (1.0 + q2);
    if !(x_c1 > 0.0) {
        return None;
    }
    let c1 = 1.0 / (omega * x_c1);
    let cp = q / (omega * rl);
    Some((c1, cp))
}

/// High-Q approximation of the tapped-capacitor divider:
/// (1 + cp/c1)² = r_parallel/rl and c1·cp/(c1 + cp) + c_out = 1/(ω²·L_D).
pub fn approximate_output_divider(
    ld: &InductorSpec,
    c_out: f64,
    omega: f64,
    rl: f64,
) -> Option<(f64, f64)> {
    let c_series = 1.0 / (omega * omega * ld.l) - c_out;
    let ratio = (ld.r_parallel / rl).sqrt() - 1.0;
    if !(c_series > 0.0 && ratio > 0.0) {
        return None;
    }
    let c1 = c_series * (1.0 + ratio) / ratio;
    Some((c1, ratio * c1))
}

/// A design under evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Circuit<'a> {
    pub tech: &'a TechnologyCard,
    pub device: &'a DevicePoint,
    pub passives: &'a PassiveSet,
}

/// Port voltages/currents of the core per volt at the gate.
struct CoreResponse {
    y11: Complex64,
    y21: Complex64,
}

impl<'a> Circuit<'a> {
    pub fn new(
        tech: &'a TechnologyCard,
        device: &'a DevicePoint,
        passives: &'a PassiveSet,
    ) -> Self {
        Self {
            tech,
            device,
            passives,
        }
    }

    fn omega0(&self) -> f64 {
        self.tech.omega0()
    }

    /// M1 with degeneration and cascode, from the gate node to the cascode drain.
    fn core(&self, omega: f64, mode: EvalMode) -> CoreResponse {
        let dev = self.device;
        let full = mode == EvalMode::Full;
        let gm = Complex64::new(dev.gm, 0.0);
        let y_t = jw(omega) * (dev.cgs + self.passives.cx);
        let z_s = inductor_impedance(&self.passives.ls, omega, self.omega0(), full);
        // vgs per unit gate voltage; written with z_s so that Ls = 0 is regular.
        let vgs = 1.0 / (1.0 + (gm + y_t) * z_s);
        if !full {
            return CoreResponse {
                y11: y_t * vgs,
                y21: gm * vgs,
            };
        }
        let y_gd = jw(omega) * dev.cgd;
        let y_x = jw(omega) * dev.cascode_node_cap(self.tech);
        let gm2 = Complex64::new(dev.gm2, 0.0);
        let vx = (y_gd - gm * vgs) / (gm2 + y_gd + y_x);
        CoreResponse {
            y11: y_t * vgs + y_gd * (1.0 - vx),
            y21: -gm2 * vx,
        }
    }

    fn gate_shunt(&self, omega: f64, mode: EvalMode) -> Complex64 {
        match mode {
            EvalMode::Ideal => Complex64::new(0.0, 0.0),
            EvalMode::Full => jw(omega) * self.device.cgb,
        }
    }

    /// Cascode output admittance and total output conductance.
    pub fn output_stage(&self, omega: f64, mode: EvalMode) -> CascodeOutput {
        let y_od = match mode {
            EvalMode::Ideal => Complex64::new(0.0, 0.0),
            EvalMode::Full => {
                let c_out = self
                    .tech
                    .device
                    .c_out
                    .unwrap_or_else(|| self.device.cgd2(self.tech));
                Complex64::new(self.tech.device.gds_out, omega * c_out)
            }
        };
        let g_ld = self.drain_inductor_admittance(omega).re;
        CascodeOutput {
            y_od,
            g_o_prime: y_od.re + g_ld,
        }
    }

    /// Drain inductor as a shunt admittance: 1/R_D + 1/(jωL_D).
    fn drain_inductor_admittance(&self, omega: f64) -> Complex64 {
        let ld = &self.passives.ld;
        let g_ld = if ld.r_parallel.is_finite() {
            1.0 / ld.r_parallel
        } else {
            0.0
        };
        Complex64::new(g_ld, 0.0) + 1.0 / (jw(omega) * ld.l)
    }

    /// Admittance of the output node before the divider: Y_od + 1/R_D + 1/(jωL_D).
    pub fn tank_admittance(&self, omega: f64, mode: EvalMode) -> Complex64 {
        self.output_stage(omega, mode).y_od + self.drain_inductor_admittance(omega)
    }

    /// Full chain matrix from the source port to the load port.
    pub fn chain(&self, f: f64, mode: EvalMode) -> Abcd {
        let omega = 2.0 * PI * f;
        let full = mode == EvalMode::Full;
        let core = self.core(omega, mode);
        let y_od = self.output_stage(omega, mode).y_od;
        Abcd::series(inductor_impedance(
            &self.passives.lg,
            omega,
            self.omega0(),
            full,
        )) * Abcd::shunt(self.gate_shunt(omega, mode))
            * Abcd::unilateral(core.y11, core.y21, y_od)
            * Abcd::shunt(self.drain_inductor_admittance(omega))
            * Abcd::series(capacitor_impedance(self.passives.c1, omega))
            * Abcd::shunt(jw(omega) * self.passives.cp.max(0.0))
    }

    /// Impedance looking into the gate inductor.
    pub fn input_impedance(&self, f: f64, mode: EvalMode) -> Complex64 {
        let omega = 2.0 * PI * f;
        let full = mode == EvalMode::Full;
        let core = self.core(omega, mode);
        inductor_impedance(&self.passives.lg, omega, self.omega0(), full)
            + 1.0 / (core.y11 + self.gate_shunt(omega, mode))
    }

    /// |I_o/V_s|: output short-circuit current of the input stage per source volt.
    pub fn effective_gm(&self, f: f64, mode: EvalMode) -> f64 {
        let omega = 2.0 * PI * f;
        let full = mode == EvalMode::Full;
        let core = self.core(omega, mode);
        let z_gate = 1.0 / (core.y11 + self.gate_shunt(omega, mode));
        let z_lg = inductor_impedance(&self.passives.lg, omega, self.omega0(), full);
        let v_gate = z_gate / (self.tech.general.rs + z_lg + z_gate);
        (core.y21 * v_gate).norm()
    }

    /// Available power gain G = G_m²·R_S/G_o' (dB).
    pub fn gain(&self, f: f64, mode: EvalMode) -> f64 {
        let gm_eff = self.effective_gm(f, mode);
        let g_o = self.output_stage(2.0 * PI * f, mode).g_o_prime;
        10.0 * (gm_eff * gm_eff * self.tech.general.rs / g_o).log10()
    }

    /// Transducer gain |S21|² from the full chain (dB).
    pub fn transducer_gain(&self, f: f64, mode: EvalMode) -> f64 {
        let s = self.sparams(f, mode);
        10.0 * s.s21.norm_sqr().log10()
    }

    pub fn sparams(&self, f: f64, mode: EvalMode) -> SParams {
        self.chain(f, mode)
            .s_parameters(self.tech.general.rs, self.tech.general.rl)
    }

    /// (S11, S22) in dB.
    pub fn s_parameters(&self, f: f64, mode: EvalMode) -> (f64, f64) {
        let s = self.sparams(f, mode);
        (reflection_db(s.s11), reflection_db(s.s22))
    }

    /// NF from F = 1 + (r_Lg + r_Ls)/R_S + (γ/α)·gm·R_S·(ω/ω_T)².
    pub fn noise_figure(&self, f: f64, mode: EvalMode) -> f64 {
        let rs = self.tech.general.rs;
        let omega0 = self.omega0();
        let r_loss = match mode {
            EvalMode::Ideal => 0.0,
            EvalMode::Full => {
                self.passives.lg.loss_resistance(omega0) + self.passives.ls.loss_resistance(omega0)
            }
        };
        let dev = &self.tech.device;
        let ratio = f / self.device.ft;
        let channel = dev.gamma_noise / dev.alpha_noise * self.device.gm * rs * ratio * ratio;
        10.0 * (1.0 + r_loss / rs + channel).log10()
    }

    /// Input-referred third-order intercept (dBm), capped at [`IIP3_CEILING_DBM`].
    pub fn iip3(&self) -> Result<f64, DeviceError> {
        let g = gm_derivatives(self.device, self.tech)?;
        let feedback = 1.0 + g.g1 * self.omega0() * self.passives.ls.l;
        let g3_eff = g.g3 / feedback.powi(3);
        if g3_eff == 0.0 {
            return Ok(IIP3_CEILING_DBM);
        }
        let a2 = 4.0 / 3.0 * (g.g1 / g3_eff).abs();
        let p_watts = a2 / (8.0 * self.tech.general.rs);
        Ok((10.0 * (p_watts / 1e-3).log10()).min(IIP3_CEILING_DBM))
    }

    pub fn evaluate(&self, f: f64, mode: EvalMode) -> Metrics {
        let (s11_db, s22_db) = self.s_parameters(f, mode);
        Metrics {
            gain_db: self.gain(f, mode),
            s11_db,
            s22_db,
            nf_db: self.noise_figure(f, mode),
            iip3_dbm: self.iip3().ok(),
            gm_eff: self.effective_gm(f, mode),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mosmodel::{device_point, DeviceMode};

    fn card() -> TechnologyCard {
        TechnologyCard::default_130nm()
    }

    /// A device with prescribed gm and cgs; other parasitics as in the card.
    fn device_with(gm: f64, cgs: f64) -> DevicePoint {
        let tech = card();
        let mut p = device_point(32e-6, 120e-9, 0.4e-3, &tech, DeviceMode::AllRegion).unwrap();
        p.gm = gm;
        p.cgs = cgs;
        p
    }

    fn matched_design(tech: &TechnologyCard, gm: f64) -> (DevicePoint, PassiveSet) {
        let w0 = tech.omega0();
        let ls = 2.99e-9;
        let ct = gm * ls / tech.general.rs;
        let lg = 1.0 / (w0 * w0 * ct) - ls;
        let dev = device_with(gm, 0.3e-12);
        let ld = InductorSpec::with_q(9.5e-9, 13.0, w0);
        let y_tank = Complex64::new(1.0 / ld.r_parallel, -1.0 / (w0 * ld.l));
        let (c1, cp) = match_output_divider(y_tank, w0, tech.general.rl).unwrap();
        let passives = PassiveSet {
            ls: InductorSpec::ideal(ls),
            lg: InductorSpec::ideal(lg),
            cx: ct - dev.cgs,
            ld,
            c1,
            cp,
        };
        (dev, passives)
    }

    #[test]
    fn matched_input_is_fifty_ohms() {
        let tech = card();
        let (dev, p) = matched_design(&tech, 10e-3);
        assert!((p.lg.l - 4.07e-9).abs() < 0.01e-9, "lg = {}", p.lg.l);
        let zin = Circuit::new(&tech, &dev, &p).input_impedance(tech.general.f0, EvalMode::Ideal);
        assert!(
            (zin - Complex64::new(50.0, 0.0)).norm() / 50.0 < 1e-6,
            "zin = {zin}"
        );
    }

    #[test]
    fn no_degeneration_means_no_real_input_part() {
        let tech = card();
        let (dev, mut p) = matched_design(&tech, 10e-3);
        p.ls = InductorSpec::ideal(0.0);
        for f in [1e9, 2.45e9, 5e9] {
            let zin = Circuit::new(&tech, &dev, &p).input_impedance(f, EvalMode::Ideal);
            assert!(zin.re.abs() < 1e-9, "zin = {zin}");
        }
    }

    #[test]
    fn matched_effective_gm_is_half_inverse_source_reactance() {
        let tech = card();
        let (dev, p) = matched_design(&tech, 10e-3);
        let gm_eff = Circuit::new(&tech, &dev, &p).effective_gm(tech.general.f0, EvalMode::Ideal);
        let expected = 1.0 / (2.0 * tech.omega0() * p.ls.l);
        assert!((gm_eff - expected).abs() / expected < 1e-9);
    }

    #[test]
    fn one_nanohenry_source_inductor_effective_gm() {
        let w0 = card().omega0();
        let gm_eff = 1.0 / (2.0 * w0 * 1e-9);
        assert!((gm_eff - 32.48e-3).abs() < 0.01e-3);
    }

    #[test]
    fn ideal_output_conductance_from_drain_inductor() {
        let tech = card();
        let (dev, p) = matched_design(&tech, 10e-3);
        let out = Circuit::new(&tech, &dev, &p).output_stage(tech.omega0(), EvalMode::Ideal);
        assert_eq!(out.y_od, Complex64::new(0.0, 0.0));
        assert!(
            (1.0 / out.g_o_prime - 1901.0).abs() < 2.0,
            "{}",
            1.0 / out.g_o_prime
        );
    }

    #[test]
    fn lossless_drain_inductor_has_zero_conductance() {
        let tech = card();
        let (dev, mut p) = matched_design(&tech, 10e-3);
        p.ld = p.ld.lossless();
        let out = Circuit::new(&tech, &dev, &p).output_stage(tech.omega0(), EvalMode::Ideal);
        assert_eq!(out.g_o_prime, 0.0);
    }

    #[test]
    fn output_conductance_adds_cascode_conductance() {
        let mut tech = card();
        tech.device.gds_out = 1e-4;
        let (dev, p) = matched_design(&tech, 10e-3);
        let c = Circuit::new(&tech, &dev, &p);
        let ideal = c.output_stage(tech.omega0(), EvalMode::Ideal).g_o_prime;
        let full = c.output_stage(tech.omega0(), EvalMode::Full);
        assert!((full.g_o_prime - full.y_od.re - ideal).abs() < 1e-18);
        assert!(full.g_o_prime > ideal);
    }

    #[test]
    fn gain_equation_arithmetic() {
        let g = |gm_eff: f64, g_o: f64| 10.0 * (gm_eff * gm_eff * 50.0 / g_o).log10();
        assert!((g(32.48e-3, 1.0 / 1901.0) - 20.0).abs() < 0.02);
        assert!((g(10.87e-3, 1.0 / 1901.0) - 10.5).abs() < 0.01);
        assert!((g(10e-3, 2.0 / 1901.0) - g(10e-3, 1.0 / 1901.0) + 3.0103).abs() < 1e-4);
    }

    #[test]
    fn reflection_formula() {
        assert_eq!(reflection_db(Complex64::new(0.0, 0.0)), S_FLOOR_DB);
        let gamma = Complex64::new((100.0 - 50.0) / (100.0 + 50.0), 0.0);
        assert!((reflection_db(gamma) + 9.542).abs() < 1e-3);
    }

    #[test]
    fn matched_design_has_deep_s11_at_center() {
        let tech = card();
        let (dev, p) = matched_design(&tech, 10e-3);
        let (s11, s22) =
            Circuit::new(&tech, &dev, &p).s_parameters(tech.general.f0, EvalMode::Ideal);
        assert!(s11 < -60.0 && s22 < -60.0, "{s11} {s22}");
    }

    #[test]
    fn noiseless_limit() {
        let mut tech = card();
        tech.device.gamma_noise = 0.0;
        let (dev, p) = matched_design(&tech, 10e-3);
        let nf = Circuit::new(&tech, &dev, &p).noise_figure(tech.general.f0, EvalMode::Full);
        assert_eq!(nf, 0.0);
    }

    #[test]
    fn nf_rises_with_gate_inductor_loss() {
        let tech = card();
        let (dev, mut p) = matched_design(&tech, 10e-3);
        let w0 = tech.omega0();
        p.lg = InductorSpec::with_q(p.lg.l, 10.0, w0);
        let nf1 = Circuit::new(&tech, &dev, &p).noise_figure(tech.general.f0, EvalMode::Full);
        p.lg = InductorSpec::with_q(p.lg.l, 5.0, w0);
        let nf2 = Circuit::new(&tech, &dev, &p).noise_figure(tech.general.f0, EvalMode::Full);
        assert!(nf2 > nf1);
    }

    #[test]
    fn nf_falls_with_transit_frequency() {
        let tech = card();
        let (mut dev, p) = matched_design(&tech, 10e-3);
        let nf1 = Circuit::new(&tech, &dev, &p).noise_figure(tech.general.f0, EvalMode::Full);
        dev.ft *= 2.0;
        let nf2 = Circuit::new(&tech, &dev, &p).noise_figure(tech.general.f0, EvalMode::Full);
        assert!(nf2 < nf1);
    }

    #[test]
    fn exact_divider_matches_output() {
        let tech = card();
        let w0 = tech.omega0();
        let (dev, p) = matched_design(&tech, 10e-3);
        let c = Circuit::new(&tech, &dev, &p);
        let zout = c
            .chain(tech.general.f0, EvalMode::Ideal)
            .output_impedance(Complex64::new(50.0, 0.0));
        assert!((zout - Complex64::new(50.0, 0.0)).norm() < 1e-6, "{zout}");
        // The high-Q rule lands in the same neighbourhood.
        let (c1a, cpa) = approximate_output_divider(&p.ld, 0.0, w0, 50.0).unwrap();
        let series = c1a * cpa / (c1a + cpa);
        assert!((series - 0.444e-12).abs() < 0.001e-12, "{series}");
        assert!((p.c1 * p.cp / (p.c1 + p.cp) - series).abs() / series < 0.1);
    }

    #[test]
    fn ideal_gain_equals_transducer_gain_when_matched() {
        let tech = card();
        let (dev, p) = matched_design(&tech, 10e-3);
        let c = Circuit::new(&tech, &dev, &p);
        let g = c.gain(tech.general.f0, EvalMode::Ideal);
        let gt = c.transducer_gain(tech.general.f0, EvalMode::Ideal);
        assert!((g - gt).abs() < 1e-6, "{g} {gt}");
    }

    #[test]
    fn supply_voltage_does_not_enter_matching() {
        let mut tech = card();
        let (dev, p) = matched_design(&tech, 10e-3);
        let before = Circuit::new(&tech, &dev, &p).s_parameters(2.4e9, EvalMode::Full);
        tech.general.vdd *= 3.0;
        let after = Circuit::new(&tech, &dev, &p).s_parameters(2.4e9, EvalMode::Full);
        assert_eq!(before, after);
    }

    #[test]
    fn iip3_is_capped_at_the_ceiling() {
        let tech = card();
        let (dev, p) = matched_design(&tech, 10e-3);
        let v = Circuit::new(&tech, &dev, &p).iip3().unwrap();
        assert!(v <= IIP3_CEILING_DBM && v.is_finite());
    }
    #[test]
    fn full_mode_without_parasitics_equals_ideal() {
        let mut tech = card();
        tech.device.cgs2_frac = 0.0;
        tech.device.cj_width = 0.0;
        tech.device.gds_out = 0.0;
        tech.device.c_out = Some(0.0);
        let (mut dev, p) = matched_design(&tech, 10e-3);
        dev.cgd = 0.0;
        dev.cgb = 0.0;
        let c = Circuit::new(&tech, &dev, &p);
        for f in [2.4e9, 2.45e9, 2.5e9] {
            let zi = c.input_impedance(f, EvalMode::Ideal);
            let zf = c.input_impedance(f, EvalMode::Full);
            assert!((zi - zf).norm() < 1e-9 * zi.norm(), "{f}: {zi} vs {zf}");
            assert!((c.gain(f, EvalMode::Ideal) - c.gain(f, EvalMode::Full)).abs() < 1e-9);
            let (si, sf) = (c.sparams(f, EvalMode::Ideal), c.sparams(f, EvalMode::Full));
            assert!((si.s21 - sf.s21).norm() < 1e-9 * si.s21.norm());
            assert!((si.s22 - sf.s22).norm() < 1e-9);
        }
    }
}
