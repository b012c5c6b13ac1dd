use std::f64::consts::PI;

use num_traits::ToPrimitive;

use crate::arith::ContinuedFraction;
use crate::error::{EhmError, Result};

const GRID: usize = 4001;

fn lagrange_max(nodes: &[f64], i: usize, x: f64) -> f64 {
    nodes
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &xj)| (x - xj).abs() / (nodes[i] - xj).abs())
        .product()
}

/// `(1/k) ln max_{x, i} prod_{j != i} |x - cos 2 pi theta_j| / |cos 2 pi theta_i - cos 2 pi theta_j|`
/// over `x in [-1, 1]`, with `k + 1` phases.
pub fn gamma_uniformity(thetas: &[f64]) -> Result<f64> {
    let (best, _) = gamma_uniformity_parts(thetas, true)?;
    Ok(best)
}

/// The measure and its grid-only value.
pub fn gamma_uniformity_parts(thetas: &[f64], refine: bool) -> Result<(f64, f64)> {
    assert!(thetas.len() >= 2);
    let k = (thetas.len() - 1) as f64;
    let nodes: Vec<f64> = thetas.iter().map(|t| (2.0 * PI * t).cos()).collect();
    for i in 0..nodes.len() {
        for j in 0..i {
            if (nodes[i] - nodes[j]).abs() < 1e-14 {
                return Err(EhmError::DegenerateNodes);
            }
        }
    }
    let h = 2.0 / (GRID - 1) as f64;
    let mut grid_best = (0.0f64, 0.0, 0usize);
    for i in 0..nodes.len() {
        for g in 0..GRID {
            let x = -1.0 + g as f64 * h;
            let v = lagrange_max(&nodes, i, x);
            if v > grid_best.0 {
                grid_best = (v, x, i);
            }
        }
    }
    let mut best = grid_best.0;
    if refine {
        for i in 0..nodes.len() {
            for g in 0..GRID {
                let x = -1.0 + g as f64 * h;
                if lagrange_max(&nodes, i, x) < 0.5 * grid_best.0 {
                    continue;
                }
                let f = |y: f64| lagrange_max(&nodes, i, y.clamp(-1.0, 1.0));
                let (mut lo, mut hi) = ((x - h).max(-1.0), (x + h).min(1.0));
                let r = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..60 {
                    let a = hi - r * (hi - lo);
                    let b = lo + r * (hi - lo);
                    if f(a) > f(b) {
                        hi = b;
                    } else {
                        lo = a;
                    }
                }
                best = best.max(f(0.5 * (lo + hi))).max(f(lo)).max(f(hi));
            }
        }
    }
    Ok((best.ln() / k, grid_best.0.ln() / k))
}

/// Which statement of the window lemma the caller is in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DegreeCase {
    /// Only the window `(9|n_j|, |n_{j+1}|/9)` is required.
    Window,
    /// Additionally `ln|m|/h <= l <= 1700 ln|m|/h`.
    Label { m: i64, h: f64 },
}

fn q_as_f64(cf: &ContinuedFraction, s: usize) -> Option<f64> {
    cf.convergents().get(s).and_then(|c| c.1.to_f64())
}

/// Index `s` with `q_s < x <= q_{s+1}` among the stored convergents.
fn bracket(cf: &ContinuedFraction, x: f64) -> Option<(f64, f64)> {
    // q_0 = 1 heads the list
    let mut qs = vec![1.0];
    qs.extend((0..cf.depth()).filter_map(|s| q_as_f64(cf, s)));
    qs.windows(2).find(|w| w[0] < x && x <= w[1]).map(|w| (w[0], w[1]))
}

fn minimal_r(qs: f64, qn: f64, above: f64) -> Option<f64> {
    let top = (qn / qs).floor();
    let r = ((above + 1.0) / qs).floor() + 1.0;
    let r = r.max(1.0);
    (r <= top).then_some(r)
}

/// `l = r q_s - 1` for the essential-degree bound between consecutive resonances
/// `n_j` and `n_{j+1}` (`None` for infinity).
pub fn essential_degree_select(n_j: i64, n_next: Option<i64>, case: DegreeCase, cf: &ContinuedFraction) -> Result<u64> {
    let nj = n_j.unsigned_abs() as f64;
    let next = n_next.map_or(f64::INFINITY, |n| n.unsigned_abs() as f64);
    let (x, above) = match case {
        DegreeCase::Window => {
            if next.is_infinite() {
                return Err(EhmError::WindowNotFound);
            }
            (next / 20.0, 9.0 * nj)
        }
        DegreeCase::Label { m, h } => {
            let big = (m.unsigned_abs() as f64).ln() / h;
            if nj / 50.0 < big && big <= 9.0 * nj {
                (25.0 * nj, 9.0 * nj)
            } else if 9.0 * nj < big && big <= next / 50.0 {
                (3.0 * big, big)
            } else {
                return Err(EhmError::WindowNotFound);
            }
        }
    };
    let (qs, qn) = bracket(cf, x).ok_or(EhmError::WindowNotFound)?;
    let r = minimal_r(qs, qn, above).ok_or(EhmError::WindowNotFound)?;
    let l = r * qs - 1.0;
    if !(l > 9.0 * nj && l < next / 9.0) {
        return Err(EhmError::WindowNotFound);
    }
    if let DegreeCase::Label { m, h } = case {
        let big = (m.unsigned_abs() as f64).ln() / h;
        if !(big <= l && l <= 1700.0 * big) {
            return Err(EhmError::WindowNotFound);
        }
    }
    Ok(l as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_nodes() {
        let g = gamma_uniformity(&[0.0, 0.25]).unwrap();
        assert!((g - 2f64.ln()).abs() < 1e-12);
        assert_eq!(gamma_uniformity(&[0.1, 0.9]), Err(EhmError::DegenerateNodes));
    }

    #[test]
    fn relabeling_and_refinement() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let mut th: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..0.5)).collect();
            let (a, grid) = gamma_uniformity_parts(&th, true).unwrap();
            assert!(a >= grid && a - grid < 1e-6);
            th.reverse();
            let b = gamma_uniformity(&th).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn brute(n_j: u64, next: u64, cf: &ContinuedFraction) -> Option<u64> {
        let qs: Vec<u64> = std::iter::once(1)
            .chain((0..cf.depth()).map(|s| cf.q(s + 1).to_u64().unwrap_or(u64::MAX)))
            .collect();
        for s in 0..qs.len() - 1 {
            if (qs[s] as f64) < next as f64 / 20.0 && next as f64 / 20.0 <= qs[s + 1] as f64 {
                for r in 1..=qs[s + 1] / qs[s] {
                    if r * qs[s] - 1 > 9 * n_j {
                        return Some(r * qs[s] - 1);
                    }
                }
            }
        }
        None
    }

    #[test]
    fn window_case_matches_enumeration() {
        let cf = ContinuedFraction::golden(40);
        let l = essential_degree_select(2, Some(10_000), DegreeCase::Window, &cf).unwrap();
        assert_eq!(Some(l), brute(2, 10_000, &cf));
        assert!(l > 18 && (l as f64) < 10_000.0 / 9.0);
        let cf = ContinuedFraction::from_u64(&[1, 3, 1, 40, 2, 7, 1, 100]).unwrap();
        for (nj, nn) in [(3u64, 20_000u64), (5, 40_000), (1, 3000)] {
            if let Ok(l) = essential_degree_select(nj as i64, Some(nn as i64), DegreeCase::Window, &cf) {
                assert_eq!(Some(l), brute(nj, nn, &cf));
                assert!(l > 9 * nj && (l as f64) < nn as f64 / 9.0);
            }
        }
    }

    #[test]
    fn label_case_with_no_next_resonance() {
        let cf = ContinuedFraction::golden(40);
        let (m, h) = (10, 0.01);
        let l = essential_degree_select(2, None, DegreeCase::Label { m, h }, &cf).unwrap();
        let big = (10f64).ln() / h;
        assert!(big <= l as f64 && l as f64 <= 1700.0 * big);
        assert!(l > 18);
        assert_eq!(
            essential_degree_select(2, None, DegreeCase::Window, &cf),
            Err(EhmError::WindowNotFound)
        );
    }

    #[test]
    fn shallow_expansion_has_no_window() {
        let cf = ContinuedFraction::golden(5);
        assert_eq!(
            essential_degree_select(2, Some(10_000), DegreeCase::Window, &cf),
            Err(EhmError::WindowNotFound)
        );
    }
}
