use std::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;

use super::coupling::Coupling;
use crate::error::{EhmError, Result};

pub type CMat = Matrix2<Complex64>;

/// Renormalization period of [`transfer_product`].
pub const RENORM_EVERY: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// `(1/c) [[E - 2cos, -c_bar(x - alpha)], [c, 0]]`
    A,
    /// Unimodular real form built from `|c|`.
    ABar,
    /// `c(x) A(x)`
    M,
}

impl Variant {
    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "a" | "A" => Some(Variant::A),
            "abar" | "ABar" | "a_bar" => Some(Variant::ABar),
            "m" | "M" => Some(Variant::M),
            _ => None,
        }
    }
}

/// Evaluates the cocycle of one coupling at one energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CocycleSampler {
    pub coupling: Coupling,
    pub alpha: f64,
    pub energy: f64,
    pub variant: Variant,
    /// Imaginary part added to every phase.
    pub im_offset: f64,
}

impl CocycleSampler {
    pub fn new(coupling: Coupling, alpha: f64, energy: f64, variant: Variant) -> Self {
        CocycleSampler {
            coupling,
            alpha,
            energy,
            variant,
            im_offset: 0.0,
        }
    }

    pub fn with_im_offset(mut self, eps: f64) -> Self {
        self.im_offset = eps;
        self
    }

    /// One step at phase `x + i*im_offset`.
    pub fn step(&self, x: f64) -> Result<CMat> {
        let z = Complex64::new(x, self.im_offset);
        let cp = &self.coupling;
        let a = self.alpha;
        let diag = Complex64::new(self.energy, 0.0) - 2.0 * (2.0 * PI * z).cos();
        let zero = Complex64::new(0.0, 0.0);
        match self.variant {
            Variant::A | Variant::M => {
                let cz = cp.c(a, z);
                let cb = cp.c_bar(a, z - a);
                let m = CMat::new(diag, -cb, cz, zero);
                if self.variant == Variant::M {
                    return Ok(m);
                }
                if cz.norm() < 1e-300 {
                    return Err(EhmError::SingularCocycle);
                }
                Ok(m / cz)
            }
            Variant::ABar => {
                let here = cp.abs_c_complex(a, z);
                let back = cp.abs_c_complex(a, z - a);
                let n = (here * back).sqrt();
                if n.norm() < 1e-300 {
                    return Err(EhmError::SingularCocycle);
                }
                Ok(CMat::new(diag, -back, here, zero) / n)
            }
        }
    }

    /// Real-phase form of the unimodular variant.
    pub fn step_real(&self, x: f64) -> Result<Matrix2<f64>> {
        let cp = &self.coupling;
        let here = cp.abs_c(self.alpha, x);
        let back = cp.abs_c(self.alpha, x - self.alpha);
        let n = (here * back).sqrt();
        if n < 1e-300 {
            return Err(EhmError::SingularCocycle);
        }
        let d = self.energy - 2.0 * (2.0 * PI * x).cos();
        Ok(Matrix2::new(d, -back, here, 0.0) / n)
    }
}

/// Norm-extracted matrix product: the product equals `exp(log_scale) * matrix`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledProduct {
    pub matrix: CMat,
    pub log_scale: f64,
}

impl ScaledProduct {
    pub fn identity() -> Self {
        ScaledProduct {
            matrix: CMat::identity(),
            log_scale: 0.0,
        }
    }

    /// `ln` of the operator norm of the full product.
    pub fn log_norm(&self) -> f64 {
        self.log_scale + op_norm(&self.matrix).ln()
    }

    /// `self * other` with scales combined.
    pub fn compose(&self, other: &ScaledProduct) -> ScaledProduct {
        let mut out = ScaledProduct {
            matrix: self.matrix * other.matrix,
            log_scale: self.log_scale + other.log_scale,
        };
        out.renormalize();
        out
    }

    fn renormalize(&mut self) {
        let s = op_norm(&self.matrix);
        if s > 0.0 && s.is_finite() {
            self.matrix /= Complex64::new(s, 0.0);
            self.log_scale += s.ln();
        }
    }
}

/// Operator 2-norm of a complex 2x2 matrix.
pub fn op_norm(m: &CMat) -> f64 {
    let f = m.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let d = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).norm_sqr();
    ((f + (f * f - 4.0 * d).max(0.0).sqrt()) / 2.0).sqrt()
}

/// `step(x + (k-1) alpha) ... step(x)` with periodic norm extraction.
pub fn transfer_product<F>(step: F, alpha: f64, x: f64, k: usize) -> Result<ScaledProduct>
where
    F: Fn(f64) -> Result<CMat>,
{
    let mut out = ScaledProduct::identity();
    let mut y = x;
    for j in 0..k {
        out.matrix = step(y)? * out.matrix;
        y += alpha;
        if y >= 1.0 {
            y -= 1.0;
        }
        if (j + 1) % RENORM_EVERY == 0 {
            out.renormalize();
        }
    }
    out.renormalize();
    Ok(out)
}

pub fn sampler_product(s: &CocycleSampler, x: f64, k: usize) -> Result<ScaledProduct> {
    transfer_product(|y| s.step(y), s.alpha, x, k)
}

/// Phase-averaged growth rate with its across-phase standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

pub fn lyapunov_of<F>(step: F, alpha: f64, iterations: usize, phases: usize) -> Result<LyapunovEstimate>
where
    F: Fn(f64) -> Result<CMat> + Sync,
{
    let p = phases.max(1);
    let rates: Vec<f64> = (0..p)
        .into_par_iter()
        .map(|j| {
            let x = (j as f64 + 0.5) / p as f64;
            transfer_product(&step, alpha, x, iterations).map(|t| t.log_norm() / iterations as f64)
        })
        .collect::<Result<_>>()?;
    let mean = rates.iter().sum::<f64>() / p as f64;
    let var = if p > 1 {
        rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (p - 1) as f64
    } else {
        0.0
    };
    Ok(LyapunovEstimate {
        estimate: mean,
        stderr: (var / p as f64).sqrt(),
    })
}

pub fn lyapunov_numeric(
    s: &CocycleSampler,
    iterations: usize,
    phases: usize,
) -> Result<LyapunovEstimate> {
    lyapunov_of(|y| s.step(y), s.alpha, iterations, phases)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn constant_outer_couplings_give_scaled_schrodinger() {
        let cp = Coupling::new(0.0, 3.0, 0.0).unwrap();
        let s = CocycleSampler::new(cp, 0.618, 0.7, Variant::ABar);
        let x = 0.23;
        let m = s.step(x).unwrap();
        let d = 0.7 - 2.0 * (2.0 * PI * x).cos();
        let want = CMat::new(c(d / 3.0), c(-1.0), c(1.0), c(0.0));
        assert!((m - want).norm() < 1e-14);
    }

    #[test]
    fn abar_is_real_unimodular() {
        let cp = Coupling::new(0.2, 3.0, 0.3).unwrap();
        let s = CocycleSampler::new(cp, 0.618, -1.3, Variant::ABar);
        for j in 0..100 {
            let x = (j as f64 * 0.754877666) % 1.0;
            let m = s.step(x).unwrap();
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            assert!((det - 1.0).norm() < 1e-12);
            assert!(m.iter().all(|z| z.im.abs() < 1e-14));
            let r = s.step_real(x).unwrap();
            assert!((r[(0, 0)] - m[(0, 0)].re).abs() < 1e-14);
        }
    }

    #[test]
    fn m_is_c_times_a() {
        let cp = Coupling::new(0.2, 3.0, 0.3).unwrap();
        let a = CocycleSampler::new(cp, 0.618, 0.4, Variant::A).with_im_offset(0.05);
        let m = CocycleSampler { variant: Variant::M, ..a };
        let x = 0.81;
        let cz = cp.c(0.618, Complex64::new(x, 0.05));
        assert!((a.step(x).unwrap() * cz - m.step(x).unwrap()).norm() < 1e-13);
    }

    #[test]
    fn product_basics() {
        let id = transfer_product(|_| Ok(CMat::identity()), 0.3, 0.1, 0).unwrap();
        assert_eq!(id.matrix, CMat::identity());
        assert_eq!(id.log_scale, 0.0);
        let d = CMat::new(c(2.0), c(0.0), c(0.0), c(0.5));
        let t = transfer_product(|_| Ok(d), 0.3, 0.1, 10).unwrap();
        assert!((t.log_norm() - 10.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn cocycle_law() {
        let cp = Coupling::new(0.2, 3.0, 0.3).unwrap();
        let alpha = 0.6180339887498949;
        let s = CocycleSampler::new(cp, alpha, 0.9, Variant::A);
        for (x, k, l) in [(0.1, 40, 25), (0.77, 100, 3), (0.5, 7, 64)] {
            let full = sampler_product(&s, x, k + l).unwrap();
            let first = sampler_product(&s, x, l).unwrap();
            let second = sampler_product(&s, (x + l as f64 * alpha).fract(), k).unwrap();
            let joined = second.compose(&first);
            let scale = (joined.log_scale - full.log_scale).exp();
            let diff = (joined.matrix * Complex64::new(scale, 0.0) - full.matrix).norm();
            assert!(diff < 1e-10 * full.matrix.norm());
            assert!((joined.log_norm() - full.log_norm()).abs() < 1e-9 * full.log_norm().abs().max(1.0));
        }
    }

    #[test]
    fn constant_hyperbolic_rate() {
        let e = std::f64::consts::E;
        let d = CMat::new(c(e), c(0.0), c(0.0), c(1.0 / e));
        let l = lyapunov_of(|_| Ok(d), 0.3, 1000, 4).unwrap();
        assert!((l.estimate - 1.0).abs() < 1e-12);
    }
}
