//! 2×2 chain (ABCD) matrices and their conversion to S-parameters with real,
//! possibly unequal, port references.

use std::ops::Mul;

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Abcd {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Abcd {
    pub fn identity() -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    pub fn series(z: Complex64) -> Self {
        Self {
            b: z,
            ..Self::identity()
        }
    }

    pub fn shunt(y: Complex64) -> Self {
        Self {
            c: y,
            ..Self::identity()
        }
    }

    /// Two-port with admittance parameters [[y11, 0], [y21, y22]].
    pub fn unilateral(y11: Complex64, y21: Complex64, y22: Complex64) -> Self {
        Self {
            a: -y22 / y21,
            b: -1.0 / y21,
            c: -(y11 * y22) / y21,
            d: -y11 / y21,
        }
    }

    /// Impedance seen at port 1 with port 2 terminated in `z_load`.
    pub fn input_impedance(&self, z_load: Complex64) -> Complex64 {
        (self.a * z_load + self.b) / (self.c * z_load + self.d)
    }

    /// Impedance seen at port 2 with port 1 terminated in `z_source`.
    pub fn output_impedance(&self, z_source: Complex64) -> Complex64 {
        (self.d * z_source + self.b) / (self.c * z_source + self.a)
    }

    pub fn s_parameters(&self, r1: f64, r2: f64) -> SParams {
        let (z1, z2) = (Complex64::new(r1, 0.0), Complex64::new(r2, 0.0));
        let den = self.a * z2 + self.b + self.c * z1 * z2 + self.d * z1;
        let k = 2.0 * (r1 * r2).sqrt();
        SParams {
            s11: (self.a * z2 + self.b - self.c * z1 * z2 - self.d * z1) / den,
            s12: k * (self.a * self.d - self.b * self.c) / den,
            s21: k / den,
            s22: (-self.a * z2 + self.b - self.c * z1 * z2 + self.d * z1) / den,
        }
    }
}

impl Mul for Abcd {
    type Output = Abcd;

    fn mul(self, o: Abcd) -> Abcd {
        Abcd {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SParams {
    pub s11: Complex64,
    pub s12: Complex64,
    pub s21: Complex64,
    pub s22: Complex64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn series_resistor_between_equal_ports() {
        let s = Abcd::series(c(50.0)).s_parameters(50.0, 50.0);
        assert!((s.s11 - c(1.0 / 3.0)).norm() < 1e-12);
        assert!((s.s21 - c(2.0 / 3.0)).norm() < 1e-12);
        assert!((s.s12 - s.s21).norm() < 1e-12);
    }

    #[test]
    fn shunt_then_series_cascade_impedance() {
        let net = Abcd::series(c(10.0)) * Abcd::shunt(c(1.0 / 40.0));
        let zin = net.input_impedance(c(40.0));
        assert!((zin - c(30.0)).norm() < 1e-12);
    }

    #[test]
    fn through_between_unequal_references_is_an_impedance_step() {
        let s = Abcd::identity().s_parameters(50.0, 200.0);
        assert!((s.s11 - c(150.0 / 250.0)).norm() < 1e-12);
        assert!((s.s11.norm_sqr() + s.s21.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unilateral_two_port_round_trip() {
        let (y11, y21, y22) = (
            Complex64::new(0.01, 0.02),
            c(-0.05),
            Complex64::new(1e-4, 3e-4),
        );
        let m = Abcd::unilateral(y11, y21, y22);
        // Port-1 admittance with a short on port 2 is y11.
        assert!((1.0 / m.input_impedance(c(0.0)) - y11).norm() < 1e-15);
        assert!((m.s_parameters(50.0, 50.0).s12).norm() < 1e-15);
    }
}
