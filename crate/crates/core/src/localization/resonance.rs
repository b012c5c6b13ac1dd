use crate::arith::{circle_norm, ContinuedFraction};

/// The dual phase, either a float or an exact half-multiple of the frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DualPhase {
    Real(f64),
    /// `theta = n alpha / 2`.
    HalfMultiple(i64),
}

impl DualPhase {
    /// `||2 theta - k alpha||` using the exact convergent of `cf`.
    pub fn distance(&self, cf: &ContinuedFraction, k: i64) -> f64 {
        match *self {
            DualPhase::Real(t) => circle_norm(2.0 * t - cf.frac_multiple(k)),
            DualPhase::HalfMultiple(n) => cf.circle_dist_multiple(n - k),
        }
    }

    pub fn value(&self, cf: &ContinuedFraction) -> f64 {
        match *self {
            DualPhase::Real(t) => t,
            DualPhase::HalfMultiple(n) => 0.5 * n as f64 * cf.value_f64(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceSet {
    pub theta: DualPhase,
    pub eps0: f64,
    /// `(n_j, ||2 theta - n_j alpha||)` ordered by `|n_j|`.
    pub entries: Vec<(i64, f64)>,
    pub search_bound: i64,
}

impl ResonanceSet {
    pub fn orders(&self) -> Vec<i64> {
        self.entries.iter().map(|e| e.0).collect()
    }

    /// `|n_{j+1}|` after the entry with order `|n|`, or `None` past the last one.
    pub fn next_after(&self, j: usize) -> Option<i64> {
        self.entries.get(j + 1).map(|e| e.0.abs())
    }
}

/// All `eps0`-resonances with `|n| <= n_max` by exhaustive scan; `0` is always listed.
pub fn resonances(theta: DualPhase, cf: &ContinuedFraction, eps0: f64, n_max: i64) -> ResonanceSet {
    assert!(eps0 > 0.0 && n_max >= 1);
    let mut entries = vec![(0, theta.distance(cf, 0))];
    let mut best = entries[0].1;
    for n in 1..=n_max {
        let dp = theta.distance(cf, n);
        let dm = theta.distance(cf, -n);
        let level = dp.min(dm);
        // ties with an earlier order are below float resolution; only strict gains count
        if level < best {
            let bound = (-eps0 * n as f64).exp();
            for (k, d) in [(n, dp), (-n, dm)] {
                if d == level && d <= bound {
                    entries.push((k, d));
                }
            }
            best = level;
        }
    }
    ResonanceSet {
        theta,
        eps0,
        entries,
        search_bound: n_max,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResonancePair {
    pub n_j: i64,
    pub n_next: i64,
    pub ratio: f64,
    pub distance: f64,
    /// `exp(-2.5 beta |n_{j+1}|)`.
    pub lower_bound: f64,
    pub holds: bool,
}

/// Consecutive-resonance diagnostics; asymptotic statements only, nothing is enforced.
pub fn resonance_gaps_check(rs: &ResonanceSet, beta: f64) -> Vec<ResonancePair> {
    rs.entries
        .windows(2)
        .filter(|w| w[0].0 != 0)
        .map(|w| {
            let (n, d) = w[0];
            let next = w[1].0.abs();
            let lower = (-2.5 * beta * next as f64).exp();
            ResonancePair {
                n_j: n,
                n_next: w[1].0,
                ratio: next as f64 / n.abs() as f64,
                distance: d,
                lower_bound: lower,
                holds: d >= lower,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::liouville_build;

    fn brute_is_resonance(theta: DualPhase, cf: &ContinuedFraction, eps0: f64, n: i64) -> bool {
        let d = theta.distance(cf, n);
        (-n.abs()..=n.abs()).all(|k| theta.distance(cf, k) >= d) && d <= (-eps0 * n.abs() as f64).exp()
    }

    #[test]
    fn planted_half_multiple_is_found() {
        let cf = ContinuedFraction::golden(40);
        let rs = resonances(DualPhase::HalfMultiple(17), &cf, 0.05, 200);
        assert!(rs.entries.contains(&(17, 0.0)));
        assert_eq!(rs.entries.last().unwrap().0, 17);
    }

    #[test]
    fn entries_obey_both_clauses_and_decrease() {
        let cf = ContinuedFraction::golden(40);
        let th = DualPhase::Real(0.3127);
        let rs = resonances(th, &cf, 0.01, 400);
        for w in rs.entries.windows(2) {
            assert!(w[1].1 <= w[0].1);
            assert!(w[1].0.abs() >= w[0].0.abs());
        }
        for &(n, _) in &rs.entries[1..] {
            assert!(brute_is_resonance(th, &cf, 0.01, n));
        }
        let listed = rs.orders();
        for n in -400..=400i64 {
            if n != 0 && brute_is_resonance(th, &cf, 0.01, n) {
                assert!(listed.contains(&n));
            }
        }
    }

    #[test]
    fn list_stabilizes_for_large_rate() {
        let cf = ContinuedFraction::golden(40);
        let th = DualPhase::Real(0.2718);
        let a = resonances(th, &cf, 0.5, 500);
        let b = resonances(th, &cf, 0.5, 1000);
        assert_eq!(a.entries, b.entries);
    }

    #[test]
    fn pair_report_shapes() {
        let cf = ContinuedFraction::golden(40);
        let lone = ResonanceSet {
            theta: DualPhase::Real(0.1),
            eps0: 1.0,
            entries: vec![(0, 0.2)],
            search_bound: 10,
        };
        assert!(resonance_gaps_check(&lone, 0.0).is_empty());
        let planted = resonances(DualPhase::HalfMultiple(5), &cf, 0.5, 300);
        assert_eq!(planted.entries.last().unwrap().0, 5);
        let pairs = resonance_gaps_check(&planted, 0.0);
        assert!(pairs.iter().all(|p| p.n_next.abs() <= 5));
    }

    #[test]
    fn liouville_planted_phase() {
        let cf = liouville_build(0.5, 8).unwrap();
        let q6 = cf.q(6).to_string().parse::<i64>().unwrap();
        let planted = resonances(DualPhase::HalfMultiple(q6), &cf, 1e-3, 5000);
        assert_eq!(planted.entries, vec![(0, cf.circle_dist_multiple(q6)), (q6, 0.0)]);
        // a generic phase stops improving once the orbit has filled the q7 lattice
        let q7 = cf.q(7).to_string().parse::<i64>().unwrap();
        let rs = resonances(DualPhase::Real(0.1234), &cf, 1e-3, 5000);
        assert!(rs.entries.last().unwrap().0.abs() < q7);
        let pairs = resonance_gaps_check(&rs, 0.5);
        assert_eq!(pairs.len(), rs.entries.len() - 2);
    }
}
