use super::normal_form::{golden_min, select_branch, sigma_min, Branch};
use super::section::SectionOptions;
use crate::error::{EhmError, Result};
use crate::operator::Coupling;
use crate::spectrum::{EdgeSource, GapStatus, SpectralGap};

/// Search settings for gap edges located as zeros of the section singular value.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSearch {
    pub section: SectionOptions,
    /// Half width scanned around the centre of a gap without rotation-number edges.
    pub half_width: f64,
    /// Smallest half width scanned around a rotation-number edge.
    pub edge_window: f64,
    pub scan: usize,
    pub branch_scan: usize,
    pub branch_reach: i64,
    /// A refined minimum below this counts as a zero.
    pub zero_tol: f64,
    /// Shrink factor of the window when only one zero is seen.
    pub zoom: f64,
    pub max_zooms: u32,
}

impl Default for EdgeSearch {
    fn default() -> Self {
        EdgeSearch {
            section: SectionOptions::default(),
            half_width: 3e-5,
            edge_window: 1e-6,
            scan: 41,
            branch_scan: 9,
            branch_reach: 2,
            zero_tol: 1e-7,
            zoom: 20.0,
            max_zooms: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionZero {
    pub energy: f64,
    pub sigma_min: f64,
    /// Final golden-section bracket.
    pub width: f64,
}

fn refine(f: &mut dyn FnMut(f64) -> f64, lo: f64, hi: f64) -> SectionZero {
    let (energy, sigma_min, width) = golden_min(f, lo, hi, 4.0 * f64::EPSILON);
    SectionZero {
        energy,
        sigma_min,
        width,
    }
}

/// Zeros of `f` on `[lo, hi]`: local minima of an `n`-point scan refined by golden section.
pub fn scan_zeros(f: &mut dyn FnMut(f64) -> f64, lo: f64, hi: f64, n: usize, zero_tol: f64) -> Vec<SectionZero> {
    let n = n.max(3);
    let xs: Vec<f64> = (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut out: Vec<SectionZero> = Vec::new();
    for i in 0..n {
        let left = if i == 0 { f64::INFINITY } else { ys[i - 1] };
        let right = if i == n - 1 { f64::INFINITY } else { ys[i + 1] };
        if ys[i] > left || ys[i] > right {
            continue;
        }
        let z = refine(f, xs[i.saturating_sub(1)], xs[(i + 1).min(n - 1)]);
        let dup = out.iter().any(|o| (o.energy - z.energy).abs() <= 4.0 * (o.width + z.width) + 1e-15);
        if z.sigma_min <= zero_tol && !dup {
            out.push(z);
        }
    }
    out.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap());
    out
}

fn branch_near(c: &Coupling, alpha: f64, m: i64, lo: f64, hi: f64, s: &EdgeSearch) -> Result<Branch> {
    let n = s.branch_scan.max(2);
    let es: Vec<f64> = (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect();
    Ok(select_branch(c, alpha, m, &es, s.branch_reach, &s.section)?.0)
}

/// The zero nearest `e` within `[e - w, e + w]`.
pub fn section_edge_near(
    c: &Coupling,
    alpha: f64,
    branch: Branch,
    e: f64,
    w: f64,
    s: &EdgeSearch,
) -> Result<SectionZero> {
    let mut err = None;
    let mut f = |x: f64| match sigma_min(c, alpha, x, branch, &s.section) {
        Ok(v) => v,
        Err(x) => {
            err = Some(x);
            f64::INFINITY
        }
    };
    let zs = scan_zeros(&mut f, e - w, e + w, s.scan, s.zero_tol);
    if let Some(x) = err {
        return Err(x);
    }
    zs.into_iter()
        .min_by(|a, b| (a.energy - e).abs().partial_cmp(&(b.energy - e).abs()).unwrap())
        .ok_or(EhmError::NoSection)
}

/// Both edges of the gap around `centre` found as a pair of adjacent zeros,
/// zooming in on a lone zero when the pair is not separated by the scan.
pub fn section_pair(
    c: &Coupling,
    alpha: f64,
    branch: Branch,
    centre: f64,
    half_width: f64,
    s: &EdgeSearch,
) -> Result<(SectionZero, SectionZero)> {
    let mut err = None;
    let mut f = |x: f64| match sigma_min(c, alpha, x, branch, &s.section) {
        Ok(v) => v,
        Err(x) => {
            err = Some(x);
            f64::INFINITY
        }
    };
    let mut w = half_width;
    let mut at = centre;
    let mut zs = scan_zeros(&mut f, at - w, at + w, s.scan, s.zero_tol);
    let mut zooms = 0;
    while zs.len() < 2 && zooms < s.max_zooms {
        if let Some(z) = zs.first() {
            at = z.energy;
        }
        w /= s.zoom;
        zs = scan_zeros(&mut f, at - w, at + w, s.scan, s.zero_tol);
        zooms += 1;
    }
    if let Some(x) = err {
        return Err(x);
    }
    if zs.len() < 2 {
        return Err(EhmError::NoSection);
    }
    let i = (0..zs.len() - 1)
        .min_by(|&i, &j| {
            let d = |k: usize| (0.5 * (zs[k].energy + zs[k + 1].energy) - centre).abs();
            d(i).partial_cmp(&d(j)).unwrap()
        })
        .unwrap();
    Ok((zs[i], zs[i + 1]))
}

/// Replaces the edges of `gap` by zeros of the section singular value.
///
/// Gaps with rotation-number edges are refined edge by edge; the rest are
/// searched around their centre.
pub fn section_gap(c: &Coupling, alpha: f64, gap: &SpectralGap, s: &EdgeSearch) -> Result<SpectralGap> {
    let m = gap.label;
    let (lo, hi) = if gap.length > 0.0 && gap.status != GapStatus::Unresolved {
        let cap = gap.length / 4.0;
        let wl = (2.0 * gap.edge_widths.0).max(s.edge_window).min(cap);
        let wh = (2.0 * gap.edge_widths.1).max(s.edge_window).min(cap);
        let branch = branch_near(c, alpha, m, gap.e_plus - wh, gap.e_plus + wh, s)?;
        let lo = section_edge_near(c, alpha, branch, gap.e_minus, wl, s).map_err(|x| x.at("lower edge"))?;
        let hi = section_edge_near(c, alpha, branch, gap.e_plus, wh, s).map_err(|x| x.at("upper edge"))?;
        (lo, hi)
    } else {
        let centre = 0.5 * (gap.e_minus + gap.e_plus);
        let w = s.half_width.max(gap.length).max(gap.edge_widths.0);
        let branch = branch_near(c, alpha, m, centre - w, centre + w, s)?;
        section_pair(c, alpha, branch, centre, w, s).map_err(|x| x.at("edge pair"))?
    };
    if !(hi.energy > lo.energy) {
        return Err(EhmError::RotationInconsistency.at("section edges"));
    }
    Ok(SpectralGap {
        label: m,
        e_minus: lo.energy,
        e_plus: hi.energy,
        length: hi.energy - lo.energy,
        rho_residual: gap.rho_residual,
        edge_residuals: (lo.sigma_min, hi.sigma_min),
        rho_err: gap.rho_err,
        edge_widths: (lo.width, hi.width),
        status: GapStatus::Open,
        edge_source: EdgeSource::Section,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scan_finds_both_zeros_of_a_w() {
        let mut f = |x: f64| (0.3 * (x - 0.2).abs()).min(0.25 * (x - 0.2071).abs()).max(1e-14);
        let zs = scan_zeros(&mut f, 0.0, 1.0, 41, 1e-9);
        assert_eq!(zs.len(), 1);
        let zs = scan_zeros(&mut f, 0.19, 0.22, 41, 1e-9);
        assert_eq!(zs.len(), 2);
        assert!((zs[0].energy - 0.2).abs() < 1e-13 && (zs[1].energy - 0.2071).abs() < 1e-13);
    }

    #[test]
    fn minima_above_the_tolerance_are_not_zeros() {
        let mut f = |x: f64| 1e-3 + (x - 0.5).abs();
        assert!(scan_zeros(&mut f, 0.0, 1.0, 21, 1e-6).is_empty());
    }
}
