use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{EhmError, Result};

/// Coupling regions of the three-parameter family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    I,
    II,
    III,
    Boundary,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::I => "I",
            Region::II => "II",
            Region::III => "III",
            Region::Boundary => "boundary",
        }
    }
}

/// Coupling triple; the outer two may vanish (the almost Mathieu case).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub region: Region,
}

pub fn classify_region(l1: f64, l2: f64, l3: f64) -> Result<Region> {
    let ok = |v: f64| v.is_finite() && v >= 0.0;
    if !(ok(l1) && ok(l3) && l2.is_finite() && l2 > 0.0) {
        return Err(EhmError::InvalidCoupling);
    }
    let outer = l1 + l3;
    Ok(if outer.max(l2) < 1.0 {
        Region::I
    } else if outer.max(1.0) < l2 {
        Region::II
    } else if l2.max(1.0) < outer {
        Region::III
    } else {
        Region::Boundary
    })
}

impl Coupling {
    pub fn new(l1: f64, l2: f64, l3: f64) -> Result<Self> {
        let region = classify_region(l1, l2, l3)?;
        Ok(Coupling { l1, l2, l3, region })
    }

    /// `(l3/l2, 1/l2, l1/l2)`.
    pub fn dual(&self) -> Coupling {
        Coupling::new(self.l3 / self.l2, 1.0 / self.l2, self.l1 / self.l2)
            .expect("dual of a valid coupling is valid")
    }

    /// Off-diagonal symbol at a complex phase.
    pub fn c(&self, alpha: f64, z: Complex64) -> Complex64 {
        let e = (Complex64::i() * 2.0 * PI * (z + alpha / 2.0)).exp();
        self.l1 / e + self.l2 + self.l3 * e
    }

    /// Analytic extension of `conj(c(x))` from the real line.
    pub fn c_bar(&self, alpha: f64, z: Complex64) -> Complex64 {
        let e = (Complex64::i() * 2.0 * PI * (z + alpha / 2.0)).exp();
        self.l1 * e + self.l2 + self.l3 / e
    }

    /// Analytic extension of `|c|` (principal root of `c * c_bar`).
    pub fn abs_c_complex(&self, alpha: f64, z: Complex64) -> Complex64 {
        (self.c(alpha, z) * self.c_bar(alpha, z)).sqrt()
    }

    /// `|c|(x)` on the real line.
    #[inline]
    pub fn abs_c(&self, alpha: f64, x: f64) -> f64 {
        let (s, co) = (2.0 * PI * (x + alpha / 2.0)).sin_cos();
        let re = self.l2 + (self.l1 + self.l3) * co;
        let im = (self.l3 - self.l1) * s;
        re.hypot(im)
    }

    /// Lower bound `l2 - l1 - l3` for `|c|` on the real line.
    pub fn abs_c_floor(&self) -> f64 {
        self.l2 - self.l1 - self.l3
    }
}

pub fn dual_coupling(c: &Coupling) -> Coupling {
    c.dual()
}

fn root_sum(m: f64, l1: f64, l3: f64) -> Result<f64> {
    let disc = m * m - 4.0 * l1 * l3;
    if disc < 0.0 {
        return Err(EhmError::ComplexBranch);
    }
    Ok(m + disc.sqrt())
}

/// Closed-form Lyapunov exponent of the dual model and the mean of `ln|c|` of the dual symbol.
///
/// Returns `(L, C)`; `L + C` is the growth rate of the dual determinants.
pub fn closed_form_constants(c: &Coupling) -> Result<(f64, f64)> {
    let m = (c.l1 + c.l3).max(1.0);
    let top = root_sum(c.l2, c.l1, c.l3)?;
    let bottom = root_sum(m, c.l1, c.l3)?;
    let lyap = (top / bottom).ln();
    let c_const = (bottom / (2.0 * c.l2)).ln();
    Ok((lyap, c_const))
}

/// The same log-ratio evaluated on the dual triple instead of the original one.
///
/// Kept for comparison only; it is not the mean of `ln|c|` for the dual symbol.
pub fn c_const_dual_triple(c: &Coupling) -> Result<f64> {
    let d = c.dual();
    let m = (d.l1 + d.l3).max(1.0);
    Ok((root_sum(m, d.l1, d.l3)? / (2.0 * d.l2)).ln())
}

/// Derived rates used by the localization and reducibility stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterSet {
    pub lyap_closed: f64,
    pub c_const: f64,
    pub eps0: f64,
    pub h: f64,
    pub eta: f64,
    pub delta: f64,
}

impl ParameterSet {
    pub fn new(c: &Coupling, beta: f64) -> Result<Self> {
        let (lyap, c_const) = closed_form_constants(c)?;
        Ok(ParameterSet {
            lyap_closed: lyap,
            c_const,
            eps0: lyap / 1e5,
            h: lyap / (200.0 * PI),
            eta: lyap / (4000.0 * PI),
            delta: 5.0 * beta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regions() {
        assert_eq!(classify_region(0.2, 3.0, 0.3).unwrap(), Region::II);
        assert_eq!(classify_region(0.2, 0.3, 0.2).unwrap(), Region::I);
        assert_eq!(classify_region(1.0, 0.5, 0.8).unwrap(), Region::III);
        assert_eq!(classify_region(0.5, 1.0, 0.5).unwrap(), Region::Boundary);
        assert_eq!(classify_region(-0.1, 3.0, 0.3), Err(EhmError::InvalidCoupling));
        assert_eq!(classify_region(0.1, 0.0, 0.3), Err(EhmError::InvalidCoupling));
    }

    #[test]
    fn duality_is_an_involution_into_region_one() {
        let c = Coupling::new(0.2, 3.0, 0.3).unwrap();
        let d = c.dual();
        assert!((d.l1 - 0.1).abs() < 1e-15);
        assert!((d.l2 - 1.0 / 3.0).abs() < 1e-15);
        assert!((d.l3 - 0.2 / 3.0).abs() < 1e-15);
        assert_eq!(d.region, Region::I);
        let dd = d.dual();
        for (a, b) in [(dd.l1, c.l1), (dd.l2, c.l2), (dd.l3, c.l3)] {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn symbol_values() {
        let amo = Coupling::new(0.0, 2.5, 0.0).unwrap();
        for x in [0.0, 0.17, 0.9] {
            assert!((amo.c(0.3, Complex64::new(x, 0.1)) - 2.5).norm() < 1e-14);
        }
        let c = Coupling::new(0.2, 3.0, 0.3).unwrap();
        assert!((c.c(0.0, Complex64::new(0.0, 0.0)) - 3.5).norm() < 1e-14);
        let alpha = 0.618;
        let min = (0..512)
            .map(|j| c.abs_c(alpha, j as f64 / 512.0))
            .fold(f64::INFINITY, f64::min);
        assert!(min >= c.abs_c_floor() - 1e-12);
        let x = 0.37;
        let z = Complex64::new(x, 0.0);
        assert!((c.c_bar(alpha, z) - c.c(alpha, z).conj()).norm() < 1e-14);
        assert!((c.abs_c_complex(alpha, z).re - c.abs_c(alpha, x)).abs() < 1e-14);
    }

    #[test]
    fn closed_forms() {
        let amo = Coupling::new(0.0, 3.0, 0.0).unwrap();
        let (l, cc) = closed_form_constants(&amo).unwrap();
        assert!((l - 3f64.ln()).abs() < 1e-15);
        assert!((l + cc).abs() < 1e-15);
        let c = Coupling::new(0.2, 3.0, 0.3).unwrap();
        let (l, cc) = closed_form_constants(&c).unwrap();
        assert!((l - 1.158).abs() < 5e-4);
        assert!((cc + 1.1649).abs() < 5e-4);
        assert!((c_const_dual_triple(&c).unwrap() - 1.092).abs() < 5e-4);
        let bad = Coupling::new(2.0, 1.0, 2.0).unwrap();
        assert_eq!(closed_form_constants(&bad), Err(EhmError::ComplexBranch));
    }

    #[test]
    fn mean_log_symbol_matches_quadrature() {
        // the dual symbol's mean log modulus, by a fine Riemann sum
        let c = Coupling::new(0.2, 3.0, 0.3).unwrap();
        let d = c.dual();
        let n = 4096;
        let q: f64 = (0..n)
            .map(|j| d.abs_c(0.0, j as f64 / n as f64).ln())
            .sum::<f64>()
            / n as f64;
        let (_, cc) = closed_form_constants(&c).unwrap();
        assert!((q - cc).abs() < 1e-12);
    }

    #[test]
    fn parameter_rates() {
        let c = Coupling::new(0.2, 3.0, 0.3).unwrap();
        let p = ParameterSet::new(&c, 0.01).unwrap();
        assert!((p.eta - p.h / 20.0).abs() < 1e-18);
        assert!((p.eps0 - p.lyap_closed / 1e5).abs() < 1e-18);
        assert!((p.delta - 0.05).abs() < 1e-15);
    }
}
