use std::f64::consts::PI;

use num_complex::Complex64;

use super::fourier::FourierSeries;
use crate::error::{EhmError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HomologicalSolution {
    pub phi: FourierSeries,
    /// Smallest `|exp(2 pi i k alpha / period) - 1|` over the modes used.
    pub min_divisor: f64,
    pub min_divisor_mode: i64,
    /// Sup over a `4K` grid of `phi(x + alpha) - phi(x) - (nu - [nu])`.
    pub residual: f64,
}

/// `phi(x + alpha) - phi(x) = nu(x) - [nu]` mode by mode for `0 < |k| <= k_max`.
pub fn homological_solve(nu: &FourierSeries, alpha: f64, k_max: usize, divisor_floor: f64) -> Result<HomologicalSolution> {
    assert!(k_max <= nu.k_max);
    let p = nu.period as f64;
    let mut phi = FourierSeries::zeros(k_max, nu.period);
    let mut min_div = (f64::INFINITY, 0i64);
    for k in -(k_max as i64)..=k_max as i64 {
        if k == 0 {
            continue;
        }
        let d = Complex64::from_polar(1.0, 2.0 * PI * k as f64 * alpha / p) - 1.0;
        if d.norm() < min_div.0 {
            min_div = (d.norm(), k);
        }
        if d.norm() < divisor_floor {
            return Err(EhmError::SmallDivisorBreach(k));
        }
        phi.set(k, nu.coeff(k) / d);
    }
    let nu_k = nu.truncate(k_max);
    let mut defect = phi.shifted(alpha).add(&phi.scale(Complex64::new(-1.0, 0.0)));
    defect = defect.add(&nu_k.scale(Complex64::new(-1.0, 0.0)));
    defect.set(0, Complex64::new(0.0, 0.0));
    let residual = defect.grid_sup(4 * k_max.max(1));
    Ok(HomologicalSolution {
        phi,
        min_divisor: min_div.0,
        min_divisor_mode: min_div.1,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::liouville_build;

    const GOLD: f64 = 0.6180339887498949;

    fn grid_residual(phi: &FourierSeries, nu: impl Fn(f64) -> f64, mean: f64, alpha: f64, m: usize) -> f64 {
        (0..m)
            .map(|j| {
                let x = j as f64 / m as f64;
                (phi.eval(x + alpha) - phi.eval(x) - (nu(x) - mean)).norm()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn single_harmonic() {
        let nu = FourierSeries::from_fn(|x| Complex64::new((2.0 * PI * x).cos(), 0.0), 1, 4, 16);
        let s = homological_solve(&nu, GOLD, 4, 1e-12).unwrap();
        let d = Complex64::from_polar(1.0, 2.0 * PI * GOLD) - 1.0;
        assert!((s.phi.coeff(1) - 0.5 / d).norm() < 1e-15);
        assert!((s.phi.coeff(-1) - 0.5 / d.conj()).norm() < 1e-15);
        assert!(grid_residual(&s.phi, |x| (2.0 * PI * x).cos(), 0.0, GOLD, 64) < 1e-13);
        assert!(s.residual < 1e-13);
    }

    #[test]
    fn constant_gives_zero() {
        let nu = FourierSeries::constant(Complex64::new(2.5, 0.0), 1);
        let s = homological_solve(&nu, GOLD, 0, 1e-12).unwrap();
        assert!(s.phi.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn smooth_right_hand_side() {
        let f = |x: f64| ((2.0 * PI * x).cos() * 0.8).exp() * (1.0 + 0.3 * (4.0 * PI * x).sin());
        let nu = FourierSeries::from_fn(|x| Complex64::new(f(x), 0.0), 1, 64, 256);
        let s = homological_solve(&nu, GOLD, 64, 1e-12).unwrap();
        let mean = nu.mean().re;
        // the oracle checks the equation at points off the transform grid
        let off = (0..300)
            .map(|j| {
                let x = (j as f64 + 0.31) / 300.0;
                (s.phi.eval(x + GOLD) - s.phi.eval(x) - (f(x) - mean)).norm()
            })
            .fold(0.0, f64::max);
        assert!(off < 1e-10, "{off}");
        assert!(s.residual < 1e-10);
        assert!(s.phi.reality_defect() < 1e-12);
    }

    #[test]
    fn liouville_resonant_mode_breaches() {
        let cf = liouville_build(0.5, 8).unwrap();
        let alpha = cf.value_f64();
        let q7 = cf.q(7).to_string().parse::<i64>().unwrap();
        let floor = 1e-6;
        assert!(cf.circle_dist_multiple(q7) * 2.0 * PI < floor);
        let mut nu = FourierSeries::zeros(q7 as usize, 1);
        nu.set(q7, Complex64::new(1e-3, 0.0));
        nu.set(-q7, Complex64::new(1e-3, 0.0));
        let err = homological_solve(&nu, alpha, q7 as usize, floor).unwrap_err();
        assert!(matches!(err, EhmError::SmallDivisorBreach(k) if k.abs() == q7));
        assert!(homological_solve(&nu, alpha, q7 as usize - 1, floor).is_ok());
    }
}
