use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{EhmError, Result};
use crate::operator::Coupling;

/// Grid and tolerance knobs of [`bands_rational`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandOptions {
    /// Phase samples in one period `[0, 1/q)` of the trace.
    pub phase_grid: usize,
    /// Energy samples across the scan interval.
    pub energy_grid: usize,
    pub refine_tol: f64,
}

impl Default for BandOptions {
    fn default() -> Self {
        BandOptions {
            phase_grid: 16,
            energy_grid: 20000,
            refine_tol: 1e-11,
        }
    }
}

/// Sup-norm bound `2 + 2 max|c|` on the spectrum.
pub fn spectral_bound(c: &Coupling) -> f64 {
    2.0 + 2.0 * (c.l1 + c.l2 + c.l3)
}

/// Trace of the unimodular transfer matrix over one period `q` at `alpha = p/q`.
pub fn period_trace(c: &Coupling, p: u64, q: u64, x: f64, e: f64) -> f64 {
    let alpha = p as f64 / q as f64;
    let (mut m00, mut m01, mut m10, mut m11) = (1.0, 0.0, 0.0, 1.0);
    let mut prev = c.abs_c(alpha, x - alpha);
    let mut norm = 1.0;
    for k in 0..q {
        let y = x + k as f64 * alpha;
        let here = c.abs_c(alpha, y);
        let t = e - 2.0 * (2.0 * PI * y).cos();
        // [[t, -prev], [here, 0]] * M
        let (n00, n01) = (t * m00 - prev * m10, t * m01 - prev * m11);
        let (n10, n11) = (here * m00, here * m01);
        m00 = n00;
        m01 = n01;
        m10 = n10;
        m11 = n11;
        norm *= here;
        prev = here;
    }
    (m00 + m11) / norm
}

/// Whether the trace at energy `e` takes a value in `[-2, 2]` for some phase.
fn in_bands(c: &Coupling, p: u64, q: u64, e: f64, grid: usize) -> bool {
    let h = 1.0 / (q as f64 * grid as f64);
    let tr: Vec<f64> = (0..grid).map(|j| period_trace(c, p, q, j as f64 * h, e)).collect();
    if tr.iter().any(|v| v.abs() <= 2.0) {
        return true;
    }
    let pos = tr[0] > 0.0;
    if tr.iter().any(|&v| (v > 0.0) != pos) {
        return true;
    }
    // refine the extremum closest to [-2, 2]
    let f = |x: f64| {
        let v = period_trace(c, p, q, x, e);
        if pos {
            v
        } else {
            -v
        }
    };
    let mut order: Vec<usize> = (0..grid).collect();
    order.sort_by(|&a, &b| f(a as f64 * h).partial_cmp(&f(b as f64 * h)).unwrap());
    for &j in order.iter().take(3) {
        let (mut lo, mut hi) = ((j as f64 - 1.0) * h, (j as f64 + 1.0) * h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut a = hi - g * (hi - lo);
        let mut b = lo + g * (hi - lo);
        let (mut fa, mut fb) = (f(a), f(b));
        for _ in 0..80 {
            if fa < fb {
                hi = b;
                b = a;
                fb = fa;
                a = hi - g * (hi - lo);
                fa = f(a);
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + g * (hi - lo);
                fb = f(b);
            }
            if fa.min(fb) <= 2.0 {
                return true;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
    }
    false
}

/// Bands of the period-`q` operator at `alpha = p/q`, scanned over `energies`
/// (must be increasing) and refined by bisection on the trace indicator.
pub fn bands_on_grid(c: &Coupling, p: u64, q: u64, energies: &[f64], opts: &BandOptions) -> Result<Vec<(f64, f64)>> {
    assert!(q > 0 && num_integer::gcd(p, q) == 1, "p/q must be in lowest terms");
    let span = energies.last().unwrap() - energies[0];
    if !(opts.refine_tol > 0.0) || opts.refine_tol < 64.0 * f64::EPSILON * span.abs().max(1.0) {
        return Err(EhmError::UnresolvedBandEdge);
    }
    let grid = opts.phase_grid.max(4);
    let flags: Vec<bool> = energies.par_iter().map(|&e| in_bands(c, p, q, e, grid)).collect();
    let edge = |mut inside: f64, mut outside: f64| {
        while (inside - outside).abs() > opts.refine_tol {
            let mid = 0.5 * (inside + outside);
            if in_bands(c, p, q, mid, grid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        0.5 * (inside + outside)
    };
    let mut runs = Vec::new();
    let mut start = None;
    for i in 0..energies.len() {
        match (flags[i], start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, energies.len() - 1));
    }
    let bands: Vec<(f64, f64)> = runs
        .par_iter()
        .map(|&(s, t)| {
            let lo = if s == 0 { energies[0] } else { edge(energies[s], energies[s - 1]) };
            let hi = if t + 1 == energies.len() { energies[t] } else { edge(energies[t], energies[t + 1]) };
            (lo, hi)
        })
        .collect();
    Ok(bands)
}

/// Bands of the period-`q` operator over `[-B, B]` with `B` the spectral bound.
pub fn bands_rational(c: &Coupling, p: u64, q: u64, opts: &BandOptions) -> Result<Vec<(f64, f64)>> {
    let b = spectral_bound(c) + 0.5;
    bands_on_grid(c, p, q, &linspace(-b, b, opts.energy_grid), opts)
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Bands of `c` and of its dual on matching energy grids; the dual bands come back scaled by `l2`.
pub fn dual_band_pair(c: &Coupling, p: u64, q: u64, opts: &BandOptions) -> Result<(Vec<(f64, f64)>, Vec<(f64, f64)>)> {
    let b = spectral_bound(c) + 0.5;
    let grid = linspace(-b, b, opts.energy_grid);
    let direct = bands_on_grid(c, p, q, &grid, opts)?;
    let scaled: Vec<f64> = grid.iter().map(|e| e / c.l2).collect();
    let dual_opts = BandOptions {
        refine_tol: opts.refine_tol / c.l2,
        ..*opts
    };
    let dual = bands_on_grid(&c.dual(), p, q, &scaled, &dual_opts)?;
    Ok((direct, dual.into_iter().map(|(a, b)| (a * c.l2, b * c.l2)).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};

    /// Union over phases of the Bloch bands from periodic and antiperiodic eigenvalues.
    fn bloch_oracle(c: &Coupling, p: u64, q: u64, phases: usize) -> Vec<(f64, f64)> {
        let alpha = p as f64 / q as f64;
        let n = q as usize;
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for j in 0..phases {
            let th = j as f64 / phases as f64;
            for sign in [1.0, -1.0] {
                let mut m = DMatrix::zeros(n, n);
                for i in 0..n {
                    let y = th + i as f64 * alpha;
                    m[(i, i)] = 2.0 * (2.0 * PI * y).cos();
                    let o = c.abs_c(alpha, y);
                    let k = (i + 1) % n;
                    let v = if k == 0 { sign * o } else { o };
                    m[(i, k)] += v;
                    m[(k, i)] += v;
                }
                let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().cloned().collect();
                ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
                for i in 0..n {
                    lo[i] = lo[i].min(ev[i]);
                    hi[i] = hi[i].max(ev[i]);
                }
            }
        }
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for i in 0..n {
            match merged.last_mut() {
                Some(last) if lo[i] <= last.1 => last.1 = last.1.max(hi[i]),
                _ => merged.push((lo[i], hi[i])),
            }
        }
        merged
    }

    #[test]
    fn nothing_far_above_the_spectrum() {
        let c = Coupling::new(0.2, 3.0, 0.3).unwrap();
        let b = spectral_bound(&c);
        let grid = linspace(b + 1.0, b + 5.0, 200);
        let bands = bands_on_grid(&c, 5, 8, &grid, &BandOptions::default()).unwrap();
        assert!(bands.is_empty());
    }

    #[test]
    fn band_count_equals_period() {
        let c = Coupling::new(0.2, 3.0, 0.3).unwrap();
        let bands = bands_rational(&c, 5, 8, &BandOptions::default()).unwrap();
        let oracle = bloch_oracle(&c, 5, 8, 256);
        assert_eq!(bands.len(), 8);
        assert_eq!(oracle.len(), 8);
        for (a, b) in bands.iter().zip(&oracle) {
            assert!((a.0 - b.0).abs() < 1e-3 && (a.1 - b.1).abs() < 1e-3, "{a:?} {b:?}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = Coupling::new(0.2, 3.0, 0.3).unwrap();
        let tight = BandOptions {
            refine_tol: 1e-17,
            ..Default::default()
        };
        assert_eq!(bands_rational(&c, 5, 8, &tight), Err(EhmError::UnresolvedBandEdge));
    }

    #[test]
    fn duality_at_a_small_period() {
        let c = Coupling::new(0.2, 3.0, 0.3).unwrap();
        let opts = BandOptions {
            energy_grid: 4000,
            ..Default::default()
        };
        let (d, s) = dual_band_pair(&c, 8, 13, &opts).unwrap();
        assert_eq!(d.len(), s.len());
        for (a, b) in d.iter().zip(&s) {
            assert!((a.0 - b.0).abs() < 1e-8 && (a.1 - b.1).abs() < 1e-8, "{a:?} {b:?}");
        }
    }
}
