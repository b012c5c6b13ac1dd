use super::truncation::{eig_count, leading_minors, JacobiTruncation, LogSigned};
use crate::error::{EhmError, Result};

/// Which end of the window the Green's function row is pinned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Left,
    Right,
}

fn check_resonance(t: &JacobiTruncation, e: f64, tol: f64) -> Result<()> {
    if eig_count(t, e - tol) != eig_count(t, e + tol) {
        return Err(EhmError::ResonantEnergy);
    }
    Ok(())
}

/// Trailing minors: `out[i] = det(T[i..n] - e)`, `out[n] = 1`.
fn trailing_minors(t: &JacobiTruncation, e: f64) -> Vec<LogSigned> {
    let d: Vec<f64> = t.diag.iter().rev().cloned().collect();
    let o: Vec<f64> = t.off.iter().rev().cloned().collect();
    let mut m = leading_minors(&d, &o, e);
    m.reverse();
    m
}

/// Entry `(i, j)` (local indices) of `(T - e)^{-1}` by Cramer's rule on tridiagonal minors.
pub fn green_local(t: &JacobiTruncation, e: f64, i: usize, j: usize, tol: f64) -> Result<f64> {
    check_resonance(t, e, tol)?;
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    let lead = leading_minors(&t.diag, &t.off, e);
    let trail = trailing_minors(t, e);
    Ok(cramer(t, &lead, &trail, i, j))
}

fn cramer(t: &JacobiTruncation, lead: &[LogSigned], trail: &[LogSigned], i: usize, j: usize) -> f64 {
    let n = t.len();
    let mut log = lead[i].log_abs + trail[j + 1].log_abs - lead[n].log_abs;
    let mut sign = lead[i].sign * trail[j + 1].sign * lead[n].sign;
    for k in i..j {
        log += t.off[k].abs().ln();
        sign *= -t.off[k].signum();
    }
    sign * log.exp()
}

/// `G(x1, y)` or `G(y, x2)` for a window site `y` given in absolute coordinates.
pub fn green_entry(t: &JacobiTruncation, e: f64, endpoint: Endpoint, y: i64, tol: f64) -> Result<f64> {
    let (x1, x2) = t.window;
    assert!((x1..=x2).contains(&y), "site outside the window");
    let k = (y - x1) as usize;
    match endpoint {
        Endpoint::Left => green_local(t, e, 0, k, tol),
        Endpoint::Right => green_local(t, e, k, t.len() - 1, tol),
    }
}

/// Largest violation of the boundary representation
/// `u(x) = -G(x, a) o(a-1) u(a-1) - G(x, b) o(b) u(b+1)` over the box `[a, b]`
/// (local indices of `t`, strictly interior) for a solution `u` of `(T - e) u = 0`.
pub fn poisson_residual(t: &JacobiTruncation, u: &[f64], e: f64, box_lo: usize, box_hi: usize, tol: f64) -> Result<f64> {
    assert!(box_lo >= 1 && box_hi + 1 < t.len() && box_lo <= box_hi);
    let inner = t.slice(box_lo, box_hi);
    check_resonance(&inner, e, tol)?;
    let lead = leading_minors(&inner.diag, &inner.off, e);
    let trail = trailing_minors(&inner, e);
    let last = inner.len() - 1;
    let left = t.off[box_lo - 1] * u[box_lo - 1];
    let right = t.off[box_hi] * u[box_hi + 1];
    let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for x in 0..=last {
        let g_left = cramer(&inner, &lead, &trail, 0, x);
        let g_right = cramer(&inner, &lead, &trail, x, last);
        let pred = -g_left * left - g_right * right;
        worst = worst.max((pred - u[box_lo + x]).abs() / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::Coupling;
    use crate::spectrum::truncation::{truncation, Flavor};
    use nalgebra::{DMatrix, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    const GOLD: f64 = 0.6180339887498949;

    fn shifted_dense(t: &JacobiTruncation, e: f64) -> DMatrix<f64> {
        let n = t.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = t.diag[i] - e;
            if i + 1 < n {
                m[(i, i + 1)] = t.off[i];
                m[(i + 1, i)] = t.off[i];
            }
        }
        m
    }

    #[test]
    fn single_site_box() {
        let c = Coupling::new(0.2, 3.0, 0.3).unwrap().dual();
        let t = truncation(&c, GOLD, 0.17, (5, 5), Flavor::Direct).unwrap();
        let g = green_entry(&t, 0.4, Endpoint::Left, 5, 1e-12).unwrap();
        let d = 2.0 * (2.0 * PI * (0.17 + 5.0 * GOLD)).cos();
        assert!((g - 1.0 / (d - 0.4)).abs() < 1e-14);
    }

    #[test]
    fn cramer_matches_dense_inverse() {
        let c = Coupling::new(0.2, 3.0, 0.3).unwrap().dual();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x1 = rng.gen_range(-20..20);
            let t = truncation(&c, GOLD, rng.gen(), (x1, x1 + 7), Flavor::Direct).unwrap();
            let e = rng.gen_range(-3.0..3.0);
            let inv = shifted_dense(&t, e).try_inverse().unwrap();
            for y in x1..=x1 + 7 {
                let k = (y - x1) as usize;
                let l = green_entry(&t, e, Endpoint::Left, y, 1e-12).unwrap();
                let r = green_entry(&t, e, Endpoint::Right, y, 1e-12).unwrap();
                assert!((l - inv[(0, k)]).abs() <= 1e-10 * inv[(0, k)].abs());
                assert!((r - inv[(k, 7)]).abs() <= 1e-10 * inv[(k, 7)].abs());
            }
        }
    }

    #[test]
    fn resonant_energy_is_rejected() {
        let c = Coupling::new(0.2, 3.0, 0.3).unwrap().dual();
        let t = truncation(&c, GOLD, 0.3, (0, 5), Flavor::Direct).unwrap();
        let ev = SymmetricEigen::new(shifted_dense(&t, 0.0)).eigenvalues[2];
        assert_eq!(
            green_entry(&t, ev, Endpoint::Left, 3, 1e-9),
            Err(EhmError::ResonantEnergy)
        );
    }

    #[test]
    fn poisson_identity_on_eigenvectors() {
        let c = Coupling::new(0.2, 3.0, 0.3).unwrap().dual();
        let t = truncation(&c, GOLD, 0.41, (0, 39), Flavor::Direct).unwrap();
        let eig = SymmetricEigen::new(shifted_dense(&t, 0.0));
        for k in [3, 17, 30] {
            let e = eig.eigenvalues[k];
            let u: Vec<f64> = eig.eigenvectors.column(k).iter().cloned().collect();
            let r = poisson_residual(&t, &u, e, 10, 21, 1e-12).unwrap();
            assert!(r < 1e-8, "residual {r}");
        }
    }
}
