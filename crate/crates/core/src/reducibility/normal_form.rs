use std::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64;

use super::fourier::FourierSeries;
use super::homological::homological_solve;
use super::section::{invariant_section, section_singulars, SectionOptions};
use crate::error::{EhmError, Result};
use crate::operator::{CocycleSampler, Coupling, Variant};
use crate::spectrum::SpectralGap;

/// 2x2 matrix of Fourier series, row major.
pub type FourierMatrix = [[FourierSeries; 2]; 2];

/// Real part of a Fourier matrix at `x`.
pub fn eval_matrix(b: &FourierMatrix, x: f64) -> Matrix2<f64> {
    Matrix2::new(
        b[0][0].eval(x).re,
        b[0][1].eval(x).re,
        b[1][0].eval(x).re,
        b[1][1].eval(x).re,
    )
}

/// Real unimodular cocycle at energy `e` as a closure.
pub fn abar_fn(c: &Coupling, alpha: f64, e: f64) -> Result<impl Fn(f64) -> Matrix2<f64>> {
    if !(c.abs_c_floor() > 0.0) {
        return Err(EhmError::SingularCocycle);
    }
    let s = CocycleSampler::new(*c, alpha, e, Variant::ABar);
    Ok(move |x: f64| s.step_real(x).expect("|c| is bounded away from zero"))
}

/// Twist `theta = n alpha / 2 + (1 - sign) / 4` of an invariant section.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Branch {
    pub n_tilde: i64,
    pub sign: i8,
}

impl Branch {
    pub fn theta(&self, alpha: f64) -> f64 {
        let flip = if self.sign < 0 { 0.5 } else { 0.0 };
        (self.n_tilde as f64 * alpha / 2.0 + flip).rem_euclid(1.0)
    }

    /// Branches with `n = m mod 2` and `|n| <= |m| + reach`, smallest `|n|` first.
    pub fn candidates(m: i64, reach: i64) -> Vec<Branch> {
        let top = m.abs() + reach;
        let mut ns: Vec<i64> = (-top..=top).filter(|n| (n - m).rem_euclid(2) == 0).collect();
        ns.sort_by_key(|n| (n.abs(), *n < 0));
        ns.iter()
            .flat_map(|&n| [1i8, -1].map(|sign| Branch { n_tilde: n, sign }))
            .collect()
    }
}

/// `theta = theta_tilde + n_tilde alpha / 2` with `theta_tilde` in `{0, 1/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaTilde {
    pub theta: f64,
    pub n_tilde: i64,
    pub theta_tilde: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormOptions {
    pub section: SectionOptions,
    /// Smallest order tried by the plateau search.
    pub k_min: usize,
    pub k_cap: usize,
    /// The plateau is reached once doubling K improves the section residual less than this.
    pub plateau_ratio: f64,
    pub branch_reach: i64,
    /// Half width of the energy window searched around an edge, at least.
    pub polish_window: f64,
    pub divisor_floor: f64,
    pub check_grid: usize,
    pub degree_grid: usize,
    /// Allowed Fourier tail of the off-diagonal entry, relative to its size.
    pub nu_tail_tol: f64,
    /// Largest number of samples per period for the off-diagonal entry.
    pub max_samples: usize,
}

impl Default for NormalFormOptions {
    fn default() -> Self {
        NormalFormOptions {
            section: SectionOptions::default(),
            k_min: 16,
            k_cap: 64,
            plateau_ratio: 3.0,
            branch_reach: 2,
            polish_window: 1e-9,
            divisor_floor: 1e-10,
            check_grid: 512,
            degree_grid: 4096,
            nu_tail_tol: 1e-12,
            max_samples: 1 << 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormResult {
    pub label: i64,
    pub alpha: f64,
    pub energy: f64,
    /// Period-2 real conjugation with unit determinant.
    pub b: FourierMatrix,
    pub sign: i8,
    /// The conjugated cocycle is `sign * [[1, a_m], [0, 1]]`.
    pub a_m: f64,
    pub degree: i64,
    pub degree_distance: f64,
    pub residual: f64,
    pub det_defect: f64,
    pub theta_tilde: ThetaTilde,
    pub k_max: usize,
    pub section_residual: f64,
    pub sing_gap: f64,
    pub min_divisor: f64,
    pub homological_residual: f64,
    /// Samples per period used for the off-diagonal entry.
    pub samples: usize,
}

impl NormalFormResult {
    pub fn constant(&self) -> Matrix2<f64> {
        let s = self.sign as f64;
        Matrix2::new(s, s * self.a_m, 0.0, s)
    }

    pub fn eval_b(&self, x: f64) -> Matrix2<f64> {
        eval_matrix(&self.b, x)
    }
}

/// Golden-section minimum of `f` on `[a, b]`: `(x, f(x), final bracket width)`.
pub fn golden_min(f: &mut dyn FnMut(f64) -> f64, mut a: f64, mut b: f64, rel_tol: f64) -> (f64, f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a) <= rel_tol * (a.abs().max(b.abs()).max(1.0)) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc, b - a)
    } else {
        (d, fd, b - a)
    }
}

/// Smallest singular value of the twisted operator at `(e, branch)`.
pub fn sigma_min(c: &Coupling, alpha: f64, e: f64, branch: Branch, opts: &SectionOptions) -> Result<f64> {
    let a = abar_fn(c, alpha, e)?;
    Ok(section_singulars(&a, alpha, branch.theta(alpha), opts).0)
}

/// Branch with the smallest singular value over the given energies.
pub fn select_branch(
    c: &Coupling,
    alpha: f64,
    m: i64,
    energies: &[f64],
    reach: i64,
    opts: &SectionOptions,
) -> Result<(Branch, f64)> {
    let mut best: Option<(Branch, f64)> = None;
    for br in Branch::candidates(m, reach) {
        for &e in energies {
            let s = sigma_min(c, alpha, e, br, opts)?;
            if best.map_or(true, |(_, b)| s < b * (1.0 - 1e-9)) {
                best = Some((br, s));
            }
        }
    }
    best.ok_or(EhmError::NoSection)
}

/// Edge energy refined to a zero of the section singular value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolishedEdge {
    pub energy: f64,
    pub sigma_min: f64,
    pub width: f64,
    pub k_max: usize,
    pub branch: Branch,
}

/// Minimizes the section singular value on `[lo, hi]`; with `k = None`,
/// doubles K from `k_min` until the minimum stops improving by `plateau_ratio`.
pub fn polish_edge(
    c: &Coupling,
    alpha: f64,
    m: i64,
    lo: f64,
    hi: f64,
    k: Option<usize>,
    opts: &NormalFormOptions,
) -> Result<PolishedEdge> {
    let probes: Vec<f64> = (0..5).map(|j| lo + (hi - lo) * j as f64 / 4.0).collect();
    let (branch, _) = select_branch(c, alpha, m, &probes, opts.branch_reach, &opts.section)?;
    let run = |k: usize| -> Result<PolishedEdge> {
        let so = opts.section.with_k(k);
        let mut err = None;
        let mut f = |e: f64| match sigma_min(c, alpha, e, branch, &so) {
            Ok(s) => s,
            Err(x) => {
                err = Some(x);
                f64::INFINITY
            }
        };
        let (e, s, w) = golden_min(&mut f, lo, hi, 4.0 * f64::EPSILON);
        if let Some(x) = err {
            return Err(x);
        }
        Ok(PolishedEdge {
            energy: e,
            sigma_min: s,
            width: w,
            k_max: k,
            branch,
        })
    };
    if let Some(k) = k {
        return run(k);
    }
    let mut k = opts.k_min;
    let mut prev = run(k)?;
    while 2 * k <= opts.k_cap {
        k *= 2;
        let next = run(k)?;
        let gain = prev.sigma_min / next.sigma_min.max(f64::MIN_POSITIVE);
        prev = next;
        if gain < opts.plateau_ratio {
            break;
        }
    }
    Ok(prev)
}

/// Normal form at a fixed energy and branch with section order `k`.
pub fn normal_form_at_energy(
    c: &Coupling,
    alpha: f64,
    m: i64,
    e: f64,
    branch: Branch,
    k: usize,
    opts: &NormalFormOptions,
) -> Result<NormalFormResult> {
    let a = abar_fn(c, alpha, e)?;
    normal_form_of(&a, alpha, m, e, branch, k, opts)
}

/// Normal form of an arbitrary real cocycle; `energy` is only recorded.
pub fn normal_form_of(
    a: &dyn Fn(f64) -> Matrix2<f64>,
    alpha: f64,
    m: i64,
    e: f64,
    branch: Branch,
    k: usize,
    opts: &NormalFormOptions,
) -> Result<NormalFormResult> {
    let so = opts.section.with_k(k);
    let theta = branch.theta(alpha);
    let sec = invariant_section(a, alpha, theta, &so).map_err(|x| x.at("section"))?;
    let l = branch.n_tilde;
    let sigma = branch.sign as f64;
    let ud = [sec.u[0].times_half_phase(l), sec.u[1].times_half_phase(l)];

    let m1 = (8 * (2 * k + 1)).next_power_of_two();
    let probe = [ud[0].samples(2 * m1), ud[1].samples(2 * m1)];
    let sq = |f: fn(&Complex64) -> f64| probe.iter().flatten().map(|z| f(z).powi(2)).sum::<f64>();
    let use_re = sq(|z| z.re) >= sq(|z| z.im);
    let part = move |z: Complex64| if use_re { z.re } else { z.im };
    let b1 = |x: f64| {
        let (v0, v1) = (part(ud[0].eval(x)), part(ud[1].eval(x)));
        let n2 = v0 * v0 + v1 * v1;
        Matrix2::new(v0, -v1 / n2, v1, v0 / n2)
    };

    let sample_nu = |m1: usize| -> Result<FourierSeries> {
        let mut nu_samples = Vec::with_capacity(m1);
        for j in 0..m1 {
            let x = j as f64 / m1 as f64;
            let inv = b1(x + alpha).try_inverse().ok_or(EhmError::InconsistentNormalForm.at("conjugation"))?;
            let cm = inv * a(x) * b1(x);
            nu_samples.push(Complex64::new(cm[(0, 1)], 0.0));
        }
        Ok(FourierSeries::from_samples(&nu_samples, 1, m1 / 2 - 1))
    };
    // double the grid until the coefficients past m1/4 are negligible
    // or stop shrinking
    let mut m1 = m1;
    let mut full = sample_nu(m1)?;
    let mut tail = full.tail_bound(m1 / 4);
    while tail > opts.nu_tail_tol * (1.0 + full.grid_sup(m1)) && 2 * m1 <= opts.max_samples {
        let next = sample_nu(2 * m1)?;
        let next_tail = next.tail_bound(m1 / 2);
        if next_tail > 0.5 * tail {
            break;
        }
        m1 *= 2;
        full = next;
        tail = next_tail;
    }
    let m2 = 2 * m1;
    let raw = [ud[0].samples(m2), ud[1].samples(m2)];
    let nu = full.truncate(m1 / 4);
    let a_raw = nu.mean().re;
    let hs = homological_solve(&nu.scale(Complex64::new(1.0 / sigma, 0.0)), alpha, nu.k_max, opts.divisor_floor)
        .map_err(|x| x.at("homological"))?;
    let phi = hs.phi.to_period_two().samples(m2);

    let mut cols: [Vec<Complex64>; 4] = Default::default();
    for j in 0..m2 {
        let (v0, v1) = (part(raw[0][j]), part(raw[1][j]));
        let n2 = v0 * v0 + v1 * v1;
        let p = phi[j].re;
        let entries = [v0, v0 * p - v1 / n2, v1, v1 * p + v0 / n2];
        for (col, v) in cols.iter_mut().zip(entries) {
            col.push(Complex64::new(v, 0.0));
        }
    }
    let kb = m2 / 2 - 1;
    let s = |i: usize| FourierSeries::from_samples(&cols[i], 2, kb);
    let b: FourierMatrix = [[s(0), s(1)], [s(2), s(3)]];

    let target = Matrix2::new(sigma, a_raw, 0.0, sigma);
    let g = opts.check_grid;
    let mut residual: f64 = 0.0;
    let mut det_defect: f64 = 0.0;
    for j in 0..g {
        let x = j as f64 / g as f64;
        let bx = eval_matrix(&b, x);
        let inv = eval_matrix(&b, x + alpha)
            .try_inverse()
            .ok_or(EhmError::InconsistentNormalForm.at("conjugation"))?;
        residual = residual.max((inv * a(x) * bx - target).abs().max());
        det_defect = det_defect.max((bx.determinant() - 1.0).abs());
        det_defect = det_defect.max((eval_matrix(&b, x + 1.0).determinant() - 1.0).abs());
    }
    let (degree, degree_distance) = degree(&b, opts.degree_grid).map_err(|x| x.at("degree"))?;
    Ok(NormalFormResult {
        label: m,
        alpha,
        energy: e,
        b,
        sign: branch.sign,
        a_m: sigma * a_raw,
        degree,
        degree_distance,
        residual,
        det_defect,
        theta_tilde: ThetaTilde {
            theta,
            n_tilde: l,
            theta_tilde: (theta - l as f64 * alpha / 2.0).rem_euclid(1.0),
        },
        k_max: k,
        section_residual: sec.residual,
        sing_gap: sec.sing_gap,
        min_divisor: hs.min_divisor,
        homological_residual: hs.residual,
        samples: m1,
    })
}

/// Window around the upper edge of `gap` that stays clear of the lower edge.
pub fn upper_edge_window(gap: &SpectralGap, opts: &NormalFormOptions) -> (f64, f64) {
    let mut w = (4.0 * gap.edge_widths.1).max(opts.polish_window);
    if gap.length > 0.0 {
        w = w.min(gap.length / 4.0);
    }
    (gap.e_plus - w, gap.e_plus + w)
}

/// Normal form at the upper edge of a resolved gap. `k = None` picks K at the section plateau.
pub fn normal_form_at_edge(
    c: &Coupling,
    alpha: f64,
    gap: &SpectralGap,
    k: Option<usize>,
    opts: &NormalFormOptions,
) -> Result<NormalFormResult> {
    let (lo, hi) = upper_edge_window(gap, opts);
    let p = polish_edge(c, alpha, gap.label, lo, hi, k, opts).map_err(|x| x.at("polish"))?;
    normal_form_at_energy(c, alpha, gap.label, p.energy, p.branch, p.k_max, opts)
}

/// Winding of the first column of `b` over one period in units of `pi`,
/// rounded, with the distance to the nearest integer.
pub fn degree(b: &FourierMatrix, grid: usize) -> Result<(i64, f64)> {
    let col = |x: f64| (b[0][0].eval(x).re, b[1][0].eval(x).re);
    let pts: Vec<(f64, f64)> = (0..=grid).map(|j| col(j as f64 / grid as f64)).collect();
    let scale = pts.iter().map(|p| p.0.hypot(p.1)).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(EhmError::DegreeUnresolved);
    }
    let floor = 1e-9 * scale;
    let mut total = 0.0;
    for j in 0..grid {
        let x0 = j as f64 / grid as f64;
        total += winding(&col, x0, x0 + 1.0 / grid as f64, pts[j], pts[j + 1], floor, 0)?;
    }
    let d = total / PI;
    Ok((d.round() as i64, (d - d.round()).abs()))
}

fn winding(
    col: &dyn Fn(f64) -> (f64, f64),
    x0: f64,
    x1: f64,
    p0: (f64, f64),
    p1: (f64, f64),
    floor: f64,
    depth: u32,
) -> Result<f64> {
    if p0.0.hypot(p0.1) < floor || p1.0.hypot(p1.1) < floor {
        return Err(EhmError::DegreeUnresolved);
    }
    let turn = (p0.0 * p1.1 - p0.1 * p1.0).atan2(p0.0 * p1.0 + p0.1 * p1.1);
    if turn.abs() <= 0.25 {
        return Ok(turn);
    }
    if depth >= 40 {
        return Err(EhmError::DegreeUnresolved);
    }
    let xm = 0.5 * (x0 + x1);
    let pm = col(xm);
    Ok(winding(col, x0, xm, p0, pm, floor, depth + 1)? + winding(col, xm, x1, pm, p1, floor, depth + 1)?)
}
