use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;

use super::fourier::FourierSeries;
use super::normal_form::{abar_fn, FourierMatrix, NormalFormResult};
use crate::error::{EhmError, Result};
use crate::operator::Coupling;

/// Phase means of products of the normalized conjugation `R = B / sqrt(|c|(x - alpha))`,
/// with the grid residuals of the identities they rest on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub r11_sq: f64,
    pub r11_r12: f64,
    pub r12_sq: f64,
    pub r21_sq: f64,
    /// `[R11^2][R12^2] - [R11 R12]^2`.
    pub det: f64,
    /// `R21(x + alpha) - sign R11(x)`.
    pub shift_residual: f64,
    /// `R22(x + alpha) - sign (R12(x) - a_m R11(x))`.
    pub r22_residual: f64,
    /// `R11(x+a) R12(x) - R12(x+a) R11(x) - sign/|c|(x) - a_m R11(x+a) R11(x)`.
    pub wronskian_residual: f64,
}

/// `R` at `x` and at `x + alpha`.
struct RSampler<'a> {
    nf: &'a NormalFormResult,
    c: &'a Coupling,
    alpha: f64,
}

impl RSampler<'_> {
    fn at(&self, x: f64) -> Matrix2<f64> {
        self.nf.eval_b(x) / self.c.abs_c(self.alpha, x - self.alpha).sqrt()
    }
}

/// Real samples of the period-1 part of `R` products on `grid` points of `[0, 1)`.
fn r_grid(nf: &NormalFormResult, c: &Coupling, alpha: f64, grid: usize) -> Vec<Matrix2<f64>> {
    let k = nf.b[0][0].k_max;
    if 2 * grid > 2 * k {
        let s: Vec<Vec<Complex64>> = nf.b.iter().flatten().map(|f| f.samples(2 * grid)).collect();
        (0..grid)
            .map(|j| {
                let x = j as f64 / grid as f64;
                Matrix2::new(s[0][j].re, s[1][j].re, s[2][j].re, s[3][j].re) / c.abs_c(alpha, x - alpha).sqrt()
            })
            .collect()
    } else {
        let r = RSampler { nf, c, alpha };
        (0..grid).map(|j| r.at(j as f64 / grid as f64)).collect()
    }
}

pub fn r_moments(nf: &NormalFormResult, c: &Coupling, alpha: f64, grid: usize, tol: f64) -> Result<Moments> {
    let r = RSampler { nf, c, alpha };
    let s = nf.sign as f64;
    let a = nf.a_m;
    let rs = r_grid(nf, c, alpha, grid);
    let n = grid as f64;
    let mean = |f: &dyn Fn(&Matrix2<f64>) -> f64| rs.iter().map(f).sum::<f64>() / n;
    let r11_sq = mean(&|m| m[(0, 0)] * m[(0, 0)]);
    let r11_r12 = mean(&|m| m[(0, 0)] * m[(0, 1)]);
    let r12_sq = mean(&|m| m[(0, 1)] * m[(0, 1)]);
    let r21_sq = mean(&|m| m[(1, 0)] * m[(1, 0)]);
    let (mut shift, mut r22, mut wr): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (j, here) in rs.iter().enumerate() {
        let x = j as f64 / n;
        let next = r.at(x + alpha);
        shift = shift.max((next[(1, 0)] - s * here[(0, 0)]).abs());
        r22 = r22.max((next[(1, 1)] - s * (here[(0, 1)] - a * here[(0, 0)])).abs());
        let lhs = next[(0, 0)] * here[(0, 1)] - next[(0, 1)] * here[(0, 0)];
        let rhs = s / c.abs_c(alpha, x) + a * next[(0, 0)] * here[(0, 0)];
        wr = wr.max((lhs - rhs).abs());
    }
    let m = Moments {
        r11_sq,
        r11_r12,
        r12_sq,
        r21_sq,
        det: r11_sq * r12_sq - r11_r12 * r11_r12,
        shift_residual: shift,
        r22_residual: r22,
        wronskian_residual: wr,
    };
    if shift.max(r22).max(wr) > tol || !(m.det > 0.0) || !(r11_sq > 0.0) {
        return Err(EhmError::InconsistentNormalForm);
    }
    Ok(m)
}

/// First-order part of the conjugated cocycle at `E + eps`, built from `R`.
pub fn p_tilde_from_r(r: &Matrix2<f64>, a: f64) -> Matrix2<f64> {
    let (r11, r12) = (r[(0, 0)], r[(0, 1)]);
    Matrix2::new(
        r11 * r12 - a * r11 * r11,
        r12 * r12 - a * r11 * r12,
        -r11 * r11,
        -r11 * r12,
    )
}

/// `x -> P + eps P~(x)`; the conjugated cocycle at `E + eps` is `sign` times this.
pub fn perturbed_cocycle<'a>(
    nf: &'a NormalFormResult,
    c: &'a Coupling,
    alpha: f64,
    eps: f64,
) -> impl Fn(f64) -> Matrix2<f64> + 'a {
    let p = Matrix2::new(1.0, nf.a_m, 0.0, 1.0);
    let r = RSampler { nf, c, alpha };
    move |x: f64| p + p_tilde_from_r(&r.at(x), nf.a_m) * eps
}

/// Sup over `grid` points of the gap between the formula and `sign B^{-1}(x+alpha) A_{E+eps}(x) B(x)`.
pub fn perturbation_defect(nf: &NormalFormResult, c: &Coupling, alpha: f64, eps: f64, grid: usize) -> Result<f64> {
    let a = abar_fn(c, alpha, nf.energy + eps)?;
    let formula = perturbed_cocycle(nf, c, alpha, eps);
    let s = nf.sign as f64;
    let mut worst: f64 = 0.0;
    for j in 0..grid {
        let x = j as f64 / grid as f64;
        let inv = nf.eval_b(x + alpha).try_inverse().ok_or(EhmError::InconsistentNormalForm)?;
        let direct = inv * a(x) * nf.eval_b(x) * s;
        worst = worst.max((direct - formula(x)).abs().max());
    }
    Ok(worst)
}

/// One first-order averaging step for `P + eps P~(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragingStep {
    /// Generator of the conjugation `I + eps Y`.
    pub y: FourierMatrix,
    /// `P + eps [P~]`.
    pub p1: Matrix2<f64>,
    pub p_tilde_mean: Matrix2<f64>,
    /// Sup over the grid of the conjugated cocycle minus `p1`.
    pub residual: f64,
    /// Largest per-mode condition number and its mode.
    pub worst_condition: (f64, i64),
    /// `1 / (2 sup |Y|)`.
    pub stability_bound: f64,
}

/// The 4x4 map `Y -> e Y P - P Y` on column-major vectors.
fn mode_operator(p: &Matrix2<f64>, e: Complex64) -> Matrix4<Complex64> {
    let pc = p.map(|v| Complex64::new(v, 0.0));
    let mut l = Matrix4::<Complex64>::zeros();
    for idx in 0..4 {
        let mut basis = Matrix2::<Complex64>::zeros();
        basis[(idx % 2, idx / 2)] = Complex64::new(1.0, 0.0);
        let img = basis * pc * e - pc * basis;
        for out in 0..4 {
            l[(out, idx)] = img[(out % 2, out / 2)];
        }
    }
    l
}

/// Solves `Y(x + alpha) P - P Y(x) = P~(x) - [P~]` mode by mode for `0 < |k| <= k`
/// from samples of `P~` on an equispaced grid of `[0, 1)`, then measures the
/// conjugation residual at `eps` on the same grid.
pub fn averaging_first_order(
    p: &Matrix2<f64>,
    p_tilde: &[Matrix2<f64>],
    alpha: f64,
    eps: f64,
    k: usize,
    cond_max: f64,
) -> Result<AveragingStep> {
    let g = p_tilde.len();
    assert!(2 * k < g, "too few samples for the requested order");
    let entry = |i: usize, j: usize| {
        let s: Vec<Complex64> = p_tilde.iter().map(|m| Complex64::new(m[(i, j)], 0.0)).collect();
        FourierSeries::from_samples(&s, 1, k)
    };
    let pt = [[entry(0, 0), entry(0, 1)], [entry(1, 0), entry(1, 1)]];
    let mean = Matrix2::new(pt[0][0].mean().re, pt[0][1].mean().re, pt[1][0].mean().re, pt[1][1].mean().re);
    let mut y: FourierMatrix = [
        [FourierSeries::zeros(k, 1), FourierSeries::zeros(k, 1)],
        [FourierSeries::zeros(k, 1), FourierSeries::zeros(k, 1)],
    ];
    let mut worst = (1.0, 0i64);
    for m in -(k as i64)..=k as i64 {
        if m == 0 {
            continue;
        }
        let e = Complex64::from_polar(1.0, 2.0 * PI * m as f64 * alpha);
        let l = mode_operator(p, e);
        let sv = l.singular_values();
        let cond = sv.max() / sv.min();
        if !(cond <= cond_max) {
            return Err(EhmError::ModeIllConditioned(m));
        }
        if cond > worst.0 {
            worst = (cond, m);
        }
        let rhs = Vector4::new(pt[0][0].coeff(m), pt[1][0].coeff(m), pt[0][1].coeff(m), pt[1][1].coeff(m));
        let sol = l.lu().solve(&rhs).ok_or(EhmError::ModeIllConditioned(m))?;
        for idx in 0..4 {
            y[idx % 2][idx / 2].set(m, sol[idx]);
        }
    }
    let p1 = p + mean * eps;
    let eval_y = |x: f64| {
        Matrix2::new(y[0][0].eval(x).re, y[0][1].eval(x).re, y[1][0].eval(x).re, y[1][1].eval(x).re)
    };
    let id = Matrix2::identity();
    let mut residual: f64 = 0.0;
    let mut y_sup: f64 = 0.0;
    for (j, ptx) in p_tilde.iter().enumerate() {
        let x = j as f64 / g as f64;
        let yx = eval_y(x);
        y_sup = y_sup.max(yx.norm());
        let left = (id + eval_y(x + alpha) * eps).try_inverse().ok_or(EhmError::ModeIllConditioned(0))?;
        let conj = left * (p + ptx * eps) * (id + yx * eps);
        residual = residual.max((conj - p1).abs().max());
    }
    Ok(AveragingStep {
        y,
        p1,
        p_tilde_mean: mean,
        residual,
        worst_condition: worst,
        stability_bound: if y_sup > 0.0 { 0.5 / y_sup } else { f64::INFINITY },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingOptions {
    pub grid: usize,
    pub cond_max: f64,
    pub identity_tol: f64,
}

impl Default for AveragingOptions {
    fn default() -> Self {
        AveragingOptions {
            grid: 1024,
            cond_max: 1e12,
            identity_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AveragingReport {
    /// `[[1, a_m], [0, 1]]`.
    pub p: Matrix2<f64>,
    pub p_tilde_mean: Matrix2<f64>,
    pub moments: Moments,
    /// `Lambda + eps_m Lambda_1` with `Lambda = log P`.
    pub sigma: Matrix2<f64>,
    /// `det(sigma)`.
    pub delta: f64,
    pub eps_m: f64,
    pub stability_bound: f64,
    pub worst_condition: (f64, i64),
    /// `|Trace(P + eps_m [P~]) - (2 - eps_m a_m [R11^2])|`.
    pub trace_defect: f64,
    /// `a_m [R11^2] / (det - a_m^2 [R11^2]^2 / 4)`, the gap length from the second-order trace.
    pub length_pred: f64,
}

/// `eps_m = -2 a_m [R11^2] / ([R11^2][R12^2] - [R11 R12]^2)`.
pub fn eps_m(a_m: f64, m: &Moments) -> f64 {
    -2.0 * a_m * m.r11_sq / m.det
}

/// `Lambda + eps Lambda_1` where `Lambda = [[0, a], [0, 0]]` and `Lambda_1` is the
/// first-order term of `log(P + eps Q)`.
pub fn log_first_order(a: f64, q: &Matrix2<f64>, eps: f64) -> Matrix2<f64> {
    let lam = Matrix2::new(0.0, a, 0.0, 0.0);
    let lam1 = q - (lam * q + q * lam) * 0.5 + lam * q * lam / 3.0;
    lam + lam1 * eps
}

pub fn averaging_report(nf: &NormalFormResult, c: &Coupling, alpha: f64, opts: &AveragingOptions) -> Result<AveragingReport> {
    let moments = r_moments(nf, c, alpha, opts.grid, opts.identity_tol).map_err(|x| x.at("moments"))?;
    let rs = r_grid(nf, c, alpha, opts.grid);
    let pts: Vec<Matrix2<f64>> = rs.iter().map(|r| p_tilde_from_r(r, nf.a_m)).collect();
    let p = Matrix2::new(1.0, nf.a_m, 0.0, 1.0);
    let e = eps_m(nf.a_m, &moments);
    let step = averaging_first_order(&p, &pts, alpha, e, opts.grid / 4, opts.cond_max).map_err(|x| x.at("averaging"))?;
    let sigma = log_first_order(nf.a_m, &step.p_tilde_mean, e);
    let a_r = nf.a_m * moments.r11_sq;
    Ok(AveragingReport {
        p,
        p_tilde_mean: step.p_tilde_mean,
        moments,
        sigma,
        delta: sigma.determinant(),
        eps_m: e,
        stability_bound: step.stability_bound,
        worst_condition: step.worst_condition,
        trace_defect: (step.p1.trace() - (2.0 - e * a_r)).abs(),
        length_pred: a_r / (moments.det - a_r * a_r / 4.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLD: f64 = 0.6180339887498949;

    fn smooth_p_tilde(g: usize) -> Vec<Matrix2<f64>> {
        (0..g)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / g as f64;
                Matrix2::new(
                    0.3 * t.cos(),
                    (0.5 * t.sin()).exp(),
                    -1.0 - 0.2 * (2.0 * t).cos(),
                    -0.3 * t.cos() + 0.1,
                )
            })
            .collect()
    }

    #[test]
    fn constant_perturbation_needs_no_conjugation() {
        let p = Matrix2::new(1.0, 0.4, 0.0, 1.0);
        let q = Matrix2::new(0.1, -0.3, 0.7, 0.2);
        let s = averaging_first_order(&p, &vec![q; 64], GOLD, 1e-2, 16, 1e12).unwrap();
        assert!(s.y.iter().flatten().all(|f| f.coeffs().iter().all(|c| c.norm() < 1e-15)));
        assert!((s.p1 - (p + q * 1e-2)).abs().max() < 1e-15);
        assert!(s.residual < 1e-15);
    }

    #[test]
    fn averaging_residual_is_quadratic() {
        let p = Matrix2::new(1.0, 0.4, 0.0, 1.0);
        let pts = smooth_p_tilde(128);
        let r1 = averaging_first_order(&p, &pts, GOLD, 1e-3, 32, 1e12).unwrap().residual;
        let r2 = averaging_first_order(&p, &pts, GOLD, 5e-4, 32, 1e12).unwrap().residual;
        let ratio = r2 / r1;
        assert!((0.15..=0.35).contains(&ratio), "{ratio}");
    }

    #[test]
    fn homological_identity_holds_mode_by_mode() {
        let p = Matrix2::new(1.0, -0.7, 0.0, 1.0);
        let pts = smooth_p_tilde(128);
        let s = averaging_first_order(&p, &pts, GOLD, 1e-3, 32, 1e12).unwrap();
        let ev = |x: f64| {
            Matrix2::new(s.y[0][0].eval(x).re, s.y[0][1].eval(x).re, s.y[1][0].eval(x).re, s.y[1][1].eval(x).re)
        };
        for (j, q) in pts.iter().enumerate().step_by(7) {
            let x = j as f64 / 128.0;
            let lhs = ev(x + GOLD) * p - p * ev(x);
            assert!((lhs - (q - s.p_tilde_mean)).abs().max() < 1e-12);
        }
    }

    #[test]
    fn resonant_mode_is_ill_conditioned() {
        // alpha = 1/8 makes mode 8 exactly resonant
        let p = Matrix2::new(1.0, 0.5, 0.0, 1.0);
        let err = averaging_first_order(&p, &smooth_p_tilde(64), 0.125, 1e-3, 10, 1e12).unwrap_err();
        assert!(matches!(err, EhmError::ModeIllConditioned(k) if k.abs() == 8));
    }

    #[test]
    fn log_expansion_is_traceless_and_matches_the_matrix_log() {
        let a = 0.6;
        let q = Matrix2::new(0.2, 0.9, -1.3, -0.2 + a * -1.3 * 0.0);
        // q with trace -a q21 keeps det(P + eps q) = 1 to first order
        let q = Matrix2::new(q[(0, 0)], q[(0, 1)], q[(1, 0)], -q[(0, 0)] + a * q[(1, 0)]);
        let eps = 1e-4;
        let s = log_first_order(a, &q, eps);
        assert!(s.trace().abs() < 1e-15);
        // exp(s) by series against P + eps q
        let mut term = Matrix2::identity();
        let mut ex = Matrix2::identity();
        for n in 1..30 {
            term = term * s / n as f64;
            ex += term;
        }
        let target = Matrix2::new(1.0, a, 0.0, 1.0) + q * eps;
        assert!((ex - target).abs().max() < 1e-7);
    }
}
