use super::resonance::ResonanceSet;
use crate::error::{EhmError, Result};
use crate::operator::Coupling;
use crate::spectrum::{eig_count, truncation, Flavor, JacobiTruncation};

/// Inverse-iteration sweeps.
pub const INVERSE_STEPS: usize = 5;
/// Amplitudes below this fraction of the peak are treated as round-off.
pub const NOISE_FLOOR: f64 = 1e-13;

/// Eigenpair of a dual truncation on `[-N, N]`, normalized so that `u_0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    /// `u[k + N]` is the amplitude at site `k`.
    pub u: Vec<f64>,
    pub half_width: usize,
    /// Eigenvalue in dual units, i.e. near `E / l2`.
    pub eigenvalue: f64,
    pub residual: f64,
}

impl DualState {
    pub fn at(&self, k: i64) -> f64 {
        self.u[(k + self.half_width as i64) as usize]
    }
}

/// The `k`-th eigenvalue (0-based, ascending) by count bisection.
pub fn kth_eigenvalue(t: &JacobiTruncation, k: usize) -> f64 {
    let r = t.norm_bound() + 1.0;
    let (mut lo, mut hi) = (-r, r);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eig_count(t, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `(T - shift) x = b` by Gaussian elimination with partial pivoting.
pub fn shifted_solve(t: &JacobiTruncation, shift: f64, b: &[f64]) -> Vec<f64> {
    let n = t.len();
    let tiny = f64::EPSILON * (1.0 + t.norm_bound());
    let mut d: Vec<f64> = t.diag.iter().map(|v| v - shift).collect();
    let mut du = t.off.clone();
    let mut dl = t.off.clone();
    let mut x = b.to_vec();
    if n == 1 {
        return vec![x[0] / if d[0].abs() < tiny { tiny } else { d[0] }];
    }
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i].abs() < tiny {
                d[i] = tiny;
            }
            let f = dl[i] / d[i];
            d[i + 1] -= f * du[i];
            x[i + 1] -= f * x[i];
            dl[i] = 0.0;
        } else {
            let f = d[i] / dl[i];
            d[i] = dl[i];
            let tmp = d[i + 1];
            d[i + 1] = du[i] - f * tmp;
            if i + 2 < n {
                dl[i] = du[i + 1];
                du[i + 1] = -f * dl[i];
            } else {
                dl[i] = 0.0;
            }
            du[i] = tmp;
            let bi = x[i];
            x[i] = x[i + 1];
            x[i + 1] = bi - f * x[i + 1];
        }
    }
    if d[n - 1].abs() < tiny {
        d[n - 1] = tiny;
    }
    x[n - 1] /= d[n - 1];
    x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (x[i] - du[i] * x[i + 1] - dl[i] * x[i + 2]) / d[i];
    }
    x
}

fn apply(t: &JacobiTruncation, u: &[f64]) -> Vec<f64> {
    let n = t.len();
    (0..n)
        .map(|i| {
            let mut v = t.diag[i] * u[i];
            if i > 0 {
                v += t.off[i - 1] * u[i - 1];
            }
            if i + 1 < n {
                v += t.off[i] * u[i + 1];
            }
            v
        })
        .collect()
}

fn norm(u: &[f64]) -> f64 {
    u.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Eigenvector of a truncation for the eigenvalue `lambda`, with its residual.
pub fn inverse_iteration(t: &JacobiTruncation, lambda: f64) -> (Vec<f64>, f64) {
    let n = t.len();
    let mut u: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
    for _ in 0..INVERSE_STEPS {
        u = shifted_solve(t, lambda, &u);
        let s = norm(&u);
        u.iter_mut().for_each(|v| *v /= s);
    }
    let tu = apply(t, &u);
    let r: Vec<f64> = tu.iter().zip(&u).map(|(a, b)| a - lambda * b).collect();
    (u, norm(&r))
}

/// Eigenpair of the dual truncation on `[-N, N]` at `theta` closest to `e / l2`,
/// searched within `bracket` (dual units) of the target.
pub fn dual_eigenvector(c: &Coupling, alpha: f64, theta: f64, e: f64, n: usize, bracket: f64) -> Result<DualState> {
    assert!(n >= 1);
    let t = truncation(c, alpha, theta, (-(n as i64), n as i64), Flavor::Dual)?;
    let target = e / c.l2;
    let below = eig_count(&t, target);
    let mut best: Option<f64> = None;
    for k in [below.wrapping_sub(1), below] {
        if k < t.len() {
            let ev = kth_eigenvalue(&t, k);
            if best.map_or(true, |b| (ev - target).abs() < (b - target).abs()) {
                best = Some(ev);
            }
        }
    }
    let lambda = match best {
        Some(ev) if (ev - target).abs() <= bracket => ev,
        _ => return Err(EhmError::NoState),
    };
    let (mut u, residual) = inverse_iteration(&t, lambda);
    let peak = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let centre = u[n];
    if centre.abs() < 1e-8 * peak {
        return Err(EhmError::BadNormalizationCenter);
    }
    u.iter_mut().for_each(|v| *v /= centre);
    Ok(DualState {
        residual,
        u,
        half_width: n,
        eigenvalue: lambda,
    })
}

/// Energy (in the units of `E`, not dual units) of the eigenvector of the dual
/// truncation on `[-n, n]` carrying the largest weight at the origin.
pub fn origin_state_energy(c: &Coupling, alpha: f64, theta: f64, n: usize) -> Result<f64> {
    let t = truncation(c, alpha, theta, (-(n as i64), n as i64), Flavor::Dual)?;
    let mut best = (0.0, f64::NAN);
    for k in 0..t.len() {
        let ev = kth_eigenvalue(&t, k);
        let (u, _) = inverse_iteration(&t, ev);
        if u[n].abs() > best.0 {
            best = (u[n].abs(), ev);
        }
    }
    Ok(best.1 * c.l2)
}

/// Decay fit of `|u_k|` outside the resonance windows.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayProfile {
    pub u: Vec<f64>,
    pub half_width: usize,
    /// Kept ranges of `|k|`, open at both ends.
    pub windows: Vec<(f64, f64)>,
    pub kept: Vec<bool>,
    pub fitted_rate: f64,
    /// Two-standard-error half width of the rate.
    pub rate_ci: f64,
    pub prefactor: f64,
    pub floor_rate: f64,
    pub passes: bool,
}

/// Least-squares rate of `ln|u_k|` against `|k|` on sites between consecutive
/// resonances (`c0 |n_j| < |k| < |n_{j+1}| / c0`), compared with `floor_rate`.
pub fn decay_measure(
    u: &[f64],
    half_width: usize,
    rs: &ResonanceSet,
    c0: f64,
    floor_rate: f64,
    fit_tol: f64,
) -> Result<DecayProfile> {
    assert_eq!(u.len(), 2 * half_width + 1);
    let orders: Vec<f64> = rs.entries.iter().map(|e| e.0.abs() as f64).collect();
    let windows: Vec<(f64, f64)> = (0..orders.len())
        .map(|j| {
            let next = orders.get(j + 1).map_or(f64::INFINITY, |o| o / c0);
            (c0 * orders[j], next)
        })
        .filter(|w| w.0 < w.1)
        .collect();
    let peak = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let n = half_width as i64;
    let kept: Vec<bool> = (-n..=n)
        .map(|k| {
            let a = k.unsigned_abs() as f64;
            let v = u[(k + n) as usize].abs();
            k != 0 && v > NOISE_FLOOR * peak && windows.iter().any(|w| a > w.0 && a < w.1)
        })
        .collect();
    let pts: Vec<(f64, f64)> = (-n..=n)
        .filter(|k| kept[(k + n) as usize])
        .map(|k| (k.unsigned_abs() as f64, u[(k + n) as usize].abs().ln()))
        .collect();
    if pts.len() < 10 {
        return Err(EhmError::InsufficientWindow);
    }
    let (slope, intercept, se) = least_squares(&pts);
    let rate = -slope;
    let prefactor = intercept.exp();
    let below = pts
        .iter()
        .all(|&(x, y)| y <= intercept - floor_rate * x + 1e-12 * (1.0 + y.abs()));
    Ok(DecayProfile {
        u: u.to_vec(),
        half_width,
        windows,
        kept,
        fitted_rate: rate,
        rate_ci: 2.0 * se,
        prefactor,
        floor_rate,
        passes: rate >= floor_rate * (1.0 - fit_tol) && below,
    })
}

/// Slope, intercept and slope standard error of an ordinary least-squares line.
pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let se = if pts.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ContinuedFraction;
    use crate::localization::resonance::{resonances, DualPhase};
    use crate::operator::closed_form_constants;

    const GOLD: f64 = 0.6180339887498949;

    fn empty_set() -> ResonanceSet {
        ResonanceSet {
            theta: DualPhase::Real(0.1),
            eps0: 1.0,
            entries: vec![(0, 0.2)],
            search_bound: 10,
        }
    }

    #[test]
    fn pivoted_solve_matches_dense() {
        use nalgebra::{DMatrix, DVector};
        let t = JacobiTruncation::from_parts(vec![0.1, -0.3, 2.0, 0.7, -1.1], vec![1.0, 0.4, 2.5, 0.9]);
        let b = vec![1.0, 2.0, -1.0, 0.5, 3.0];
        let x = shifted_solve(&t, 0.3, &b);
        let mut m = DMatrix::zeros(5, 5);
        for i in 0..5 {
            m[(i, i)] = t.diag[i] - 0.3;
            if i < 4 {
                m[(i, i + 1)] = t.off[i];
                m[(i + 1, i)] = t.off[i];
            }
        }
        let want = m.lu().solve(&DVector::from_vec(b)).unwrap();
        for i in 0..5 {
            assert!((x[i] - want[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn synthetic_exponential_is_recovered() {
        let n = 60;
        let u: Vec<f64> = (-(n as i64)..=n as i64).map(|k| (-0.3 * k.abs() as f64).exp()).collect();
        let p = decay_measure(&u, n, &empty_set(), 3.0, 0.1, 0.1).unwrap();
        assert!((p.fitted_rate - 0.3).abs() < 1e-12);
        assert!(p.passes);
    }

    #[test]
    fn bump_inside_a_resonance_window_is_masked() {
        let n = 80;
        let rs = ResonanceSet {
            theta: DualPhase::Real(0.1),
            eps0: 1.0,
            entries: vec![(0, 0.2), (5, 1e-3), (60, 1e-6)],
            search_bound: 100,
        };
        let clean: Vec<f64> = (-(n as i64)..=n as i64).map(|k| (-0.25 * k.abs() as f64).exp()).collect();
        let mut bumped = clean.clone();
        for k in [-30i64, 30, 40] {
            bumped[(k + n as i64) as usize] = 0.5;
        }
        let a = decay_measure(&clean, n, &rs, 3.0, 0.1, 0.1).unwrap();
        let b = decay_measure(&bumped, n, &rs, 3.0, 0.1, 0.1).unwrap();
        assert_eq!(a.fitted_rate, b.fitted_rate);
        assert!(!b.kept[(30 + n as i64) as usize]);
    }

    #[test]
    fn too_few_points() {
        let u = vec![0.5, 1.0, 0.5];
        assert_eq!(
            decay_measure(&u, 1, &empty_set(), 3.0, 0.1, 0.1),
            Err(EhmError::InsufficientWindow)
        );
    }

    #[test]
    fn almost_mathieu_dual_state() {
        let c = Coupling::new(0.0, 3.0, 0.0).unwrap();
        let e = origin_state_energy(&c, GOLD, 0.13, 20).unwrap();
        let s = dual_eigenvector(&c, GOLD, 0.13, e, 1000, 0.1).unwrap();
        assert_eq!(s.at(0), 1.0);
        assert!(s.residual < 1e-8);
        let bigger = dual_eigenvector(&c, GOLD, 0.13, s.eigenvalue * 3.0, 2000, 0.1).unwrap();
        assert!((bigger.eigenvalue - s.eigenvalue).abs() < 1e-9);
        let cf = ContinuedFraction::golden(40);
        let rs = resonances(DualPhase::Real(0.13), &cf, 0.5, 1000);
        let p = decay_measure(&s.u, s.half_width, &rs, 3.0, 0.0, 0.1).unwrap();
        let (l, _) = closed_form_constants(&c).unwrap();
        assert!((p.fitted_rate - l).abs() < 0.15 * l, "{} vs {l}", p.fitted_rate);
    }

    #[test]
    fn no_state_far_from_the_spectrum() {
        let c = Coupling::new(0.0, 3.0, 0.0).unwrap();
        assert_eq!(
            dual_eigenvector(&c, GOLD, 0.13, 30.0, 200, 0.1),
            Err(EhmError::NoState)
        );
    }
}
