use super::averaging::{averaging_report, AveragingOptions, AveragingReport};
use super::edges::{section_gap, EdgeSearch};
use super::normal_form::{normal_form_at_edge, NormalFormOptions, NormalFormResult};
use crate::arith::circle_norm;
use crate::error::{EhmError, Result};
use crate::operator::{rotation_at, CocycleSampler, Coupling, Variant};
use crate::spectrum::{gap_edges, GapStatus, RhoConfig, SpectralGap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertStatus {
    Certified,
    /// `a_m` vanishes within tolerance.
    CollapsedCandidate,
    /// `eps_m` lies beyond the averaging stability bound.
    OutOfRange,
    /// `2 rho(E+ + eps_m)` could not be separated from the label.
    RhoMargin,
    /// The measured length exceeds `|eps_m| + 2 tol`.
    BoundViolated,
}

impl CertStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CertStatus::Certified => "certified",
            CertStatus::CollapsedCandidate => "collapsed-candidate",
            CertStatus::OutOfRange => "out-of-range",
            CertStatus::RhoMargin => "rho-margin",
            CertStatus::BoundViolated => "bound-violated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertOptions {
    pub normal_form: NormalFormOptions,
    pub averaging: AveragingOptions,
    pub edges: EdgeSearch,
    /// Rotation-number settings used to find the gap before the section search.
    pub rho_search: RhoConfig,
    pub rho_search_tol: f64,
    pub rho_check_iterations: usize,
    pub rho_check_phases: usize,
    pub rho_check_doublings: u32,
    /// `||2 rho - m alpha||` must exceed this multiple of the rho error.
    pub rho_margin: f64,
    pub a_tol: f64,
    /// Section order; `None` selects the plateau.
    pub k_max: Option<usize>,
}

impl Default for CertOptions {
    fn default() -> Self {
        CertOptions {
            normal_form: NormalFormOptions::default(),
            averaging: AveragingOptions::default(),
            edges: EdgeSearch::default(),
            rho_search: RhoConfig {
                max_doublings: 3,
                ..RhoConfig::default()
            },
            rho_search_tol: 1e-7,
            rho_check_iterations: 100_000,
            rho_check_phases: 4,
            rho_check_doublings: 3,
            rho_margin: 10.0,
            a_tol: 1e-12,
            k_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoCheck {
    pub energy: f64,
    pub rho: f64,
    pub err: f64,
    /// `||2 rho - m alpha||`.
    pub distance: f64,
}

impl RhoCheck {
    pub fn separated(&self, margin: f64) -> bool {
        self.distance > margin * self.err
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapCertificate {
    pub gap: SpectralGap,
    pub e_plus: f64,
    pub a_m: f64,
    pub eps_m: f64,
    /// `eps_m^2 / 2 ([R11^2][R12^2] - [R11 R12]^2)`.
    pub delta_pred: f64,
    pub length_pred: f64,
    pub length_measured: f64,
    pub stability_bound: f64,
    pub rho_check: Option<RhoCheck>,
    pub bound_ok: bool,
    pub status: CertStatus,
    pub sign: i8,
    pub degree: i64,
    pub n_tilde: i64,
    pub k_max: usize,
    pub nf_residual: f64,
}

/// Certificate status from its ingredients, in order of precedence.
pub fn classify(a_m: f64, a_tol: f64, eps_m: f64, stability_bound: f64, rho_ok: bool, bound_ok: bool) -> CertStatus {
    if a_m.abs() <= a_tol {
        CertStatus::CollapsedCandidate
    } else if !(eps_m.abs() <= stability_bound) {
        CertStatus::OutOfRange
    } else if !rho_ok {
        CertStatus::RhoMargin
    } else if !bound_ok {
        CertStatus::BoundViolated
    } else {
        CertStatus::Certified
    }
}

/// Gap edges by a coarse rotation-number search followed by section zeros.
pub fn measure_gap(c: &Coupling, alpha: f64, m: i64, opts: &CertOptions) -> Result<SpectralGap> {
    let rough = gap_edges(c, alpha, m, opts.rho_search_tol, &opts.rho_search).map_err(|x| x.at("rho search"))?;
    if rough.status == GapStatus::Collapsed {
        return Ok(rough);
    }
    section_gap(c, alpha, &rough, &opts.edges).map_err(|x| x.at("section edges"))
}

/// `||2 rho(e) - m alpha||` against its error, doubling the orbit while undecided.
pub fn rho_check(c: &Coupling, alpha: f64, m: i64, e: f64, opts: &CertOptions) -> Result<RhoCheck> {
    let target = m as f64 * alpha;
    let s = CocycleSampler::new(*c, alpha, e, Variant::ABar);
    let mut n = opts.rho_check_iterations;
    let mut out = None;
    for _ in 0..=opts.rho_check_doublings {
        let r = rotation_at(&s, n, opts.rho_check_phases)?;
        let chk = RhoCheck {
            energy: e,
            rho: r.rho,
            err: r.err,
            distance: circle_norm(2.0 * r.rho - target),
        };
        out = Some(chk);
        if chk.separated(opts.rho_margin) {
            break;
        }
        n *= 2;
    }
    Ok(out.expect("at least one pass"))
}

/// Certificate for a gap whose edges are already resolved.
pub fn certify_gap(c: &Coupling, alpha: f64, gap: &SpectralGap, tol_e: f64, opts: &CertOptions) -> Result<GapCertificate> {
    if gap.status != GapStatus::Open {
        return Err(EhmError::InsufficientData.at("gap not open"));
    }
    let nf = normal_form_at_edge(c, alpha, gap, opts.k_max, &opts.normal_form).map_err(|x| x.at("normal form"))?;
    let rep = averaging_report(&nf, c, alpha, &opts.averaging)?;
    assemble(c, alpha, gap, tol_e, &nf, &rep, opts)
}

fn assemble(
    c: &Coupling,
    alpha: f64,
    gap: &SpectralGap,
    tol_e: f64,
    nf: &NormalFormResult,
    rep: &AveragingReport,
    opts: &CertOptions,
) -> Result<GapCertificate> {
    let eps = rep.eps_m;
    let bound_ok = gap.length <= eps.abs() + 2.0 * tol_e;
    let collapsed = nf.a_m.abs() <= opts.a_tol;
    let in_range = eps.abs() <= rep.stability_bound;
    let chk = if collapsed || !in_range {
        None
    } else {
        Some(rho_check(c, alpha, gap.label, nf.energy + eps, opts)?)
    };
    let rho_ok = chk.map_or(false, |k| k.separated(opts.rho_margin));
    Ok(GapCertificate {
        gap: gap.clone(),
        e_plus: nf.energy,
        a_m: nf.a_m,
        eps_m: eps,
        delta_pred: eps * eps / 2.0 * rep.moments.det,
        length_pred: rep.length_pred,
        length_measured: gap.length,
        stability_bound: rep.stability_bound,
        rho_check: chk,
        bound_ok,
        status: classify(nf.a_m, opts.a_tol, eps, rep.stability_bound, rho_ok, bound_ok),
        sign: nf.sign,
        degree: nf.degree,
        n_tilde: nf.theta_tilde.n_tilde,
        k_max: nf.k_max,
        nf_residual: nf.residual,
    })
}

/// Measures the gap labelled `m` and certifies it.
pub fn gap_certificate(c: &Coupling, alpha: f64, m: i64, tol_e: f64, opts: &CertOptions) -> Result<GapCertificate> {
    let gap = measure_gap(c, alpha, m, opts)?;
    certify_gap(c, alpha, &gap, tol_e, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanishing_a_m_is_a_collapsed_candidate() {
        assert_eq!(classify(0.0, 1e-12, 0.0, 1.0, false, true), CertStatus::CollapsedCandidate);
        assert_eq!(classify(1e-13, 1e-12, -1e-12, 1.0, true, true), CertStatus::CollapsedCandidate);
    }

    #[test]
    fn status_precedence() {
        assert_eq!(classify(0.1, 1e-12, -2.0, 1.0, true, true), CertStatus::OutOfRange);
        assert_eq!(classify(0.1, 1e-12, -0.2, 1.0, false, true), CertStatus::RhoMargin);
        assert_eq!(classify(0.1, 1e-12, -0.2, 1.0, true, false), CertStatus::BoundViolated);
        assert_eq!(classify(0.1, 1e-12, -0.2, 1.0, true, true), CertStatus::Certified);
        assert_eq!(classify(0.1, 1e-12, f64::NAN, 1.0, true, true), CertStatus::OutOfRange);
    }
}
