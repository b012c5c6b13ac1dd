use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use super::fourier::FourierSeries;
use crate::error::{EhmError, Result};

/// Sizes and acceptance thresholds for [`invariant_section`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionOptions {
    pub k_max: usize,
    /// Collocation points per unknown Fourier mode.
    pub oversampling: usize,
    pub max_residual: f64,
    pub min_gap: f64,
}

impl Default for SectionOptions {
    fn default() -> Self {
        SectionOptions {
            k_max: 32,
            oversampling: 4,
            max_residual: 1e-6,
            min_gap: 1e-11,
        }
    }
}

impl SectionOptions {
    pub fn with_k(mut self, k: usize) -> Self {
        self.k_max = k;
        self
    }

    fn grid(&self) -> usize {
        self.oversampling * (2 * self.k_max + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub u: [FourierSeries; 2],
    /// Grid `L^2` residual of `A(x) U(x) - exp(2 pi i theta) U(x + alpha)` for unit coefficient norm.
    pub residual: f64,
    /// Second-smallest minus smallest singular value.
    pub sing_gap: f64,
}

/// Collocation matrix of `U -> A U - exp(2 pi i theta) U(. + alpha)` on the
/// modes `|k| <= K`, scaled so singular values approximate `L^2` norms.
pub fn twisted_matrix(a: &dyn Fn(f64) -> Matrix2<f64>, alpha: f64, theta: f64, opts: &SectionOptions) -> DMatrix<Complex64> {
    let k = opts.k_max as i64;
    let n = 2 * opts.k_max + 1;
    let g = opts.grid();
    let mu = Complex64::from_polar(1.0, 2.0 * PI * theta);
    let scale = 1.0 / (g as f64).sqrt();
    let mut m = DMatrix::<Complex64>::zeros(2 * g, 2 * n);
    for j in 0..g {
        let x = j as f64 / g as f64;
        let am = a(x);
        let step = Complex64::from_polar(1.0, 2.0 * PI * x);
        let step_s = Complex64::from_polar(1.0, 2.0 * PI * (x + alpha));
        let mut e = Complex64::from_polar(1.0, -2.0 * PI * x * k as f64);
        let mut es = Complex64::from_polar(1.0, -2.0 * PI * (x + alpha) * k as f64);
        for c in 0..n {
            for r in 0..2 {
                for s in 0..2 {
                    m[(r * g + j, s * n + c)] = e * am[(r, s)] * scale;
                }
                m[(r * g + j, r * n + c)] -= mu * es * scale;
            }
            e *= step;
            es *= step_s;
        }
    }
    m
}

/// The two smallest singular values of the twisted operator.
pub fn section_singulars(a: &dyn Fn(f64) -> Matrix2<f64>, alpha: f64, theta: f64, opts: &SectionOptions) -> (f64, f64) {
    let r = twisted_matrix(a, alpha, theta, opts).qr().r();
    let mut s: Vec<f64> = r.singular_values().iter().copied().collect();
    s.sort_by(|x, y| x.partial_cmp(y).unwrap());
    (s[0], s[1])
}

/// Least-residual unit Fourier vector `U` with `A U = exp(2 pi i theta) U(. + alpha)`.
pub fn invariant_section(a: &dyn Fn(f64) -> Matrix2<f64>, alpha: f64, theta: f64, opts: &SectionOptions) -> Result<Section> {
    // R of a QR factorization has the same singular values and right vectors
    let r = twisted_matrix(a, alpha, theta, opts).qr().r();
    let svd = r.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].partial_cmp(&svd.singular_values[j]).unwrap());
    let (lo, next) = (svd.singular_values[order[0]], svd.singular_values[order[1]]);
    let n = 2 * opts.k_max + 1;
    let row = v_t.row(order[0]);
    let u1: Vec<Complex64> = (0..n).map(|i| row[i].conj()).collect();
    let u2: Vec<Complex64> = (0..n).map(|i| row[n + i].conj()).collect();
    if next - lo < opts.min_gap {
        return Err(EhmError::NonUniqueSection);
    }
    if lo > opts.max_residual {
        return Err(EhmError::NoSection);
    }
    Ok(Section {
        u: [FourierSeries::from_coeffs(u1, 1), FourierSeries::from_coeffs(u2, 1)],
        residual: lo,
        sing_gap: next - lo,
    })
}
