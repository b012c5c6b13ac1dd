use rayon::prelude::*;

use super::bands::spectral_bound;
use super::truncation::{eig_count, truncation, Flavor};
use crate::arith::circle_norm;
use crate::error::{EhmError, Result};
use crate::operator::{rotation_at, CocycleSampler, Coupling, RotationEstimate, Variant};

/// Default bound on `|m|` for [`label_gap`].
pub const M_MAX: i64 = 64;

/// Relative edge uncertainty still accepted as an open gap when the bisection
/// stalls before `tol_e`.
pub const EDGE_SPREAD: f64 = 1e-2;

/// Integrated density of states from Sturm counts averaged over `phases` phases.
pub fn ids(c: &Coupling, alpha: f64, e: f64, n: usize, phases: usize) -> Result<f64> {
    assert!(n >= 100, "box too small");
    let p = phases.max(1);
    let counts: Vec<usize> = (0..p)
        .into_par_iter()
        .map(|j| {
            let th = (j as f64 + 0.5) / p as f64;
            truncation(c, alpha, th, (0, n as i64 - 1), Flavor::Direct).map(|t| eig_count(&t, e))
        })
        .collect::<Result<_>>()?;
    Ok(counts.iter().sum::<usize>() as f64 / (p * n) as f64)
}

/// Rotation-number sampling knobs for edge bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoConfig {
    pub iterations: usize,
    pub phases: usize,
    /// How often the iteration count may double when a sample is ambiguous.
    pub max_doublings: u32,
    /// Distance to the label below which a sample counts as locked.
    pub rho_tol: f64,
    /// Largest error estimate under which a sample within three errors of the
    /// label still counts as locked once the doublings are spent.
    pub err_cap: f64,
}

impl Default for RhoConfig {
    fn default() -> Self {
        RhoConfig {
            iterations: 20000,
            phases: 4,
            max_doublings: 8,
            rho_tol: 1e-11,
            err_cap: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapStatus {
    Open,
    Collapsed,
    Unresolved,
}

impl GapStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            GapStatus::Open => "open",
            GapStatus::Collapsed => "collapsed",
            GapStatus::Unresolved => "unresolved",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGap {
    pub label: i64,
    pub e_minus: f64,
    pub e_plus: f64,
    pub length: f64,
    /// `||2 rho - m alpha||` at the midpoint.
    pub rho_residual: f64,
    /// Same distance just inside each edge.
    pub edge_residuals: (f64, f64),
    /// Largest rotation-number error estimate met at the edges.
    pub rho_err: f64,
    /// Width of the final bracket around each edge.
    pub edge_widths: (f64, f64),
    pub status: GapStatus,
    pub edge_source: EdgeSource,
}

/// How the edges were located.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeSource {
    /// Bisection on the rotation number.
    Rotation,
    /// Zeros of the smallest singular value of the twisted operator.
    Section,
}

impl EdgeSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeSource::Rotation => "rotation",
            EdgeSource::Section => "section",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Side {
    /// `2 rho` above the label: below the gap.
    Below,
    Inside,
    /// `2 rho` below the label: above the gap.
    Above,
    Ambiguous,
}

struct Probe<'a> {
    c: &'a Coupling,
    alpha: f64,
    target: f64,
    cfg: &'a RhoConfig,
}

impl Probe<'_> {
    fn rho(&self, e: f64, iterations: usize) -> Result<RotationEstimate> {
        let s = CocycleSampler::new(*self.c, self.alpha, e, Variant::ABar);
        rotation_at(&s, iterations, self.cfg.phases)
    }

    /// Side of the gap, the signed distance and the error behind the decision.
    fn side(&self, e: f64) -> Result<(Side, f64, f64)> {
        let mut n = self.cfg.iterations;
        for k in 0..=self.cfg.max_doublings {
            let r = self.rho(e, n)?;
            let d = 2.0 * r.rho - self.target;
            let band = 3.0 * r.err;
            if d.abs() <= self.cfg.rho_tol.max(band) && r.err <= self.cfg.rho_tol {
                return Ok((Side::Inside, d, r.err));
            }
            if d.abs() > band + self.cfg.rho_tol {
                let s = if d > 0.0 { Side::Below } else { Side::Above };
                return Ok((s, d, r.err));
            }
            if k == self.cfg.max_doublings {
                let s = if r.err <= self.cfg.err_cap { Side::Inside } else { Side::Ambiguous };
                return Ok((s, d, r.err));
            }
            n *= 2;
        }
        unreachable!()
    }
}

/// Edges of the gap labelled `m` by bisection on the rotation number.
pub fn gap_edges(c: &Coupling, alpha: f64, m: i64, tol_e: f64, cfg: &RhoConfig) -> Result<SpectralGap> {
    if m == 0 {
        return Err(EhmError::LabelMustBeNonzero);
    }
    if !(tol_e > 0.0) {
        return Err(EhmError::InvalidTolerance);
    }
    let target = (m as f64 * alpha).rem_euclid(1.0);
    if target < cfg.rho_tol || target > 1.0 - cfg.rho_tol {
        return Err(EhmError::LabelNotFound);
    }
    let probe = Probe {
        c,
        alpha,
        target,
        cfg,
    };
    let b = spectral_bound(c) + 1.0;
    let (mut lo, mut hi) = (-b, b);
    if probe.side(lo)?.0 != Side::Below || probe.side(hi)?.0 != Side::Above {
        return Err(EhmError::RotationInconsistency);
    }
    let mut unresolved = false;
    let mut inside = None;
    while hi - lo > tol_e {
        let mid = 0.5 * (lo + hi);
        match probe.side(mid)?.0 {
            Side::Below => lo = mid,
            Side::Above => hi = mid,
            Side::Inside => {
                inside = Some(mid);
                break;
            }
            Side::Ambiguous => {
                let (l0, h0) = (lo, hi);
                for k in 1..8 {
                    let t = l0 + (h0 - l0) * k as f64 / 8.0;
                    if k == 4 {
                        continue;
                    }
                    match probe.side(t)?.0 {
                        Side::Below => lo = lo.max(t),
                        Side::Above => hi = hi.min(t),
                        Side::Inside => {
                            inside = Some(t);
                            break;
                        }
                        Side::Ambiguous => {}
                    }
                }
                if inside.is_some() {
                    break;
                }
                if lo == l0 && hi == h0 {
                    unresolved = true;
                    break;
                }
            }
        }
    }
    let Some(mid) = inside else {
        let e = 0.5 * (lo + hi);
        let r = probe.rho(e, cfg.iterations)?;
        return Ok(SpectralGap {
            label: m,
            e_minus: e,
            e_plus: e,
            length: 0.0,
            rho_residual: circle_norm(2.0 * r.rho - target),
            edge_residuals: (f64::NAN, f64::NAN),
            rho_err: r.err,
            edge_widths: (hi - lo, hi - lo),
            status: if unresolved {
                GapStatus::Unresolved
            } else {
                GapStatus::Collapsed
            },
            edge_source: EdgeSource::Rotation,
        });
    };
    let lower = refine_edge(&probe, lo, mid, Side::Below, tol_e)?;
    let upper = refine_edge(&probe, hi, mid, Side::Above, tol_e)?;
    unresolved |= lower.unresolved || upper.unresolved;
    let (e_minus, e_plus) = (lower.edge(), upper.edge());
    let (res_lo, res_hi) = (lower.residual, upper.residual);
    let worst_err = lower.err.max(upper.err);
    let centre = 0.5 * (e_minus + e_plus);
    let (s, d, err) = probe.side(centre)?;
    if s != Side::Inside {
        return Err(EhmError::RotationInconsistency);
    }
    let length = e_plus - e_minus;
    let spread = lower.width() + upper.width();
    let status = if length <= tol_e {
        GapStatus::Collapsed
    } else if !unresolved || spread <= EDGE_SPREAD * length {
        GapStatus::Open
    } else {
        GapStatus::Unresolved
    };
    Ok(SpectralGap {
        label: m,
        e_minus,
        e_plus,
        length,
        rho_residual: d.abs(),
        edge_residuals: (res_lo, res_hi),
        rho_err: worst_err.max(err),
        edge_widths: (lower.width(), upper.width()),
        status,
        edge_source: EdgeSource::Rotation,
    })
}

struct Edge {
    outside: f64,
    inside: f64,
    residual: f64,
    err: f64,
    unresolved: bool,
}

impl Edge {
    fn edge(&self) -> f64 {
        0.5 * (self.outside + self.inside)
    }

    fn width(&self) -> f64 {
        (self.inside - self.outside).abs()
    }
}

/// Shrinks `[outside, inside]` around one edge. An undecidable midpoint is
/// stepped around by probing the quarter points; the edge stays bracketed.
fn refine_edge(probe: &Probe, outside: f64, inside: f64, out_side: Side, tol_e: f64) -> Result<Edge> {
    let mut e = Edge {
        outside,
        inside,
        residual: 0.0,
        err: 0.0,
        unresolved: false,
    };
    let wrong = if out_side == Side::Below { Side::Above } else { Side::Below };
    let classify = |t: f64, e: &mut Edge| -> Result<Side> {
        let (s, d, err) = probe.side(t)?;
        if s == wrong {
            return Err(EhmError::RotationInconsistency);
        }
        if s == Side::Inside {
            e.inside = t;
            e.residual = d.abs();
            e.err = e.err.max(err);
        } else if s == out_side {
            e.outside = t;
        }
        Ok(s)
    };
    while (e.inside - e.outside).abs() > tol_e {
        let mid = 0.5 * (e.outside + e.inside);
        if classify(mid, &mut e)? != Side::Ambiguous {
            continue;
        }
        let (o, i) = (e.outside, e.inside);
        let a = classify(0.5 * (o + mid), &mut e)?;
        let b = classify(0.5 * (mid + i), &mut e)?;
        if a != out_side && b != Side::Inside {
            e.unresolved = true;
            break;
        }
    }
    Ok(e)
}

/// The label `m` with `||2 rho - m alpha||` smallest over `|m| <= m_max`.
pub fn label_gap(rho: f64, alpha: f64, m_max: i64, margin: f64) -> Result<i64> {
    let mut scored: Vec<(f64, i64)> = (-m_max..=m_max)
        .map(|m| (circle_norm(2.0 * rho - m as f64 * alpha), m))
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.abs().cmp(&b.1.abs())));
    let (best, m) = scored[0];
    if best > margin {
        return Err(EhmError::LabelNotFound);
    }
    if scored.len() > 1 && scored[1].0 <= 2.0 * margin {
        return Err(EhmError::AmbiguousLabel);
    }
    Ok(m)
}

/// Spacings of sorted eigenvalues wider than `min_width`, as `(lower, upper)` pairs.
pub fn spacing_gaps(eigs: &[f64], min_width: f64) -> Vec<(f64, f64)> {
    eigs.windows(2)
        .filter(|w| w[1] - w[0] > min_width)
        .map(|w| (w[0], w[1]))
        .collect()
}
