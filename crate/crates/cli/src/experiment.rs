use ehm_core::arith::{beta_estimate, default_tail_start};
use ehm_core::localization::least_squares;
use ehm_core::operator::{classify_region, closed_form_constants, Region};
use ehm_core::reducibility::{certify_gap, measure_gap, CertOptions, GapCertificate};
use ehm_core::spectrum::{GapStatus, SpectralGap};
use ehm_core::{EhmError, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{KPolicy, RunConfig};
use crate::report::{num, opt_num};

/// Least-squares line through `(|m|, ln length)` for the open gaps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Closed-form Lyapunov exponent of the dual model, for context.
    pub reference_rate: f64,
    pub excluded: Vec<(i64, String)>,
    pub finite_scale_surrogate: bool,
}

/// Fits `y = slope x + intercept`; needs at least four points.
pub fn fit_line(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 4 {
        return Err(EhmError::InsufficientData);
    }
    let (slope, intercept, _) = least_squares(points);
    let my = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok((slope, intercept, r2.clamp(0.0, 1.0)))
}

/// Fit of `ln(length)` against `|m|` over `(m, length)` pairs.
pub fn fit_decay(lengths: &[(i64, f64)], reference_rate: f64, excluded: Vec<(i64, String)>) -> Result<DecayFit> {
    let points: Vec<(f64, f64)> = lengths.iter().map(|&(m, l)| (m.unsigned_abs() as f64, l.ln())).collect();
    let (slope, intercept, r_squared) = fit_line(&points)?;
    Ok(DecayFit {
        points,
        slope,
        intercept,
        r_squared,
        reference_rate,
        excluded,
        finite_scale_surrogate: true,
    })
}

/// What happened to one label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelOutcome {
    pub m: i64,
    pub gap: Option<SpectralGap>,
    pub cert: Option<GapCertificate>,
    pub error: Option<String>,
}

impl LabelOutcome {
    pub fn is_open(&self) -> bool {
        self.gap.as_ref().is_some_and(|g| g.status == GapStatus::Open)
    }

    /// Certificate status if there is one, else the gap status, else `error`.
    pub fn status(&self) -> &'static str {
        match (&self.cert, &self.gap) {
            (Some(c), _) => c.status.as_str(),
            (None, Some(g)) if g.status != GapStatus::Open => g.status.as_str(),
            _ => "error",
        }
    }
}

pub fn cert_options(cfg: &RunConfig) -> CertOptions {
    let mut o = CertOptions::default();
    o.rho_margin = cfg.rho_margin;
    o.rho_check_iterations = cfg.rho_iterations;
    o.rho_check_phases = cfg.rho_phases;
    o.normal_form.check_grid = cfg.check_grid;
    o.averaging.grid = cfg.averaging_grid;
    o.k_max = match cfg.section_k {
        KPolicy::Auto => None,
        KPolicy::Fixed(k) => Some(k),
    };
    o
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("worker pool")
}

/// Gap edges and certificate for every configured label, in label order.
pub fn run_labels(cfg: &RunConfig, certify: bool) -> Result<Vec<LabelOutcome>> {
    let c = cfg.coupling()?;
    let alpha = cfg.continued_fraction()?.value_f64();
    let opts = cert_options(cfg);
    let one = |m: i64| {
        let mut out = LabelOutcome {
            m,
            gap: None,
            cert: None,
            error: None,
        };
        match measure_gap(&c, alpha, m, &opts) {
            Ok(g) => out.gap = Some(g),
            Err(e) => {
                out.error = Some(e.to_string());
                return out;
            }
        }
        if certify && out.is_open() {
            match certify_gap(&c, alpha, out.gap.as_ref().unwrap(), cfg.tol, &opts) {
                Ok(k) => out.cert = Some(k),
                Err(e) => out.error = Some(e.to_string()),
            }
        }
        out
    };
    let labels = cfg.labels.labels();
    Ok(pool(cfg.threads).install(|| labels.par_iter().map(|&m| one(m)).collect()))
}

/// The fit hypothesis `L > C beta(alpha)` in its measurable part; logged, never enforced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub region: String,
    pub lyapunov_closed: f64,
    pub beta_tail: f64,
    /// `L / beta`; infinite when the tail value is zero.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayRun {
    pub outcomes: Vec<LabelOutcome>,
    pub fit: DecayFit,
    pub hypothesis: Hypothesis,
}

pub fn hypothesis(cfg: &RunConfig) -> Result<Hypothesis> {
    let c = cfg.coupling()?;
    let cf = cfg.continued_fraction()?;
    let (lyap, _) = closed_form_constants(&c)?;
    let beta = beta_estimate(&cf, default_tail_start(&cf))?.tail_sup;
    Ok(Hypothesis {
        region: classify_region(c.l1, c.l2, c.l3)?.as_str().to_string(),
        lyapunov_closed: lyap,
        beta_tail: beta,
        ratio: if beta > 0.0 { lyap / beta } else { f64::INFINITY },
    })
}

/// Measures and certifies every label, then fits the decay of the open gaps.
pub fn decay_experiment(cfg: &RunConfig) -> Result<DecayRun> {
    let c = cfg.coupling()?;
    if classify_region(c.l1, c.l2, c.l3)? != Region::II {
        return Err(EhmError::InvalidCoupling.at("decay experiment needs region II"));
    }
    let hyp = hypothesis(cfg)?;
    let outcomes = run_labels(cfg, true)?;
    let mut lengths = Vec::new();
    let mut excluded = Vec::new();
    for o in &outcomes {
        match &o.gap {
            Some(g) if g.status == GapStatus::Open && g.length > 0.0 => lengths.push((o.m, g.length)),
            Some(g) => excluded.push((o.m, g.status.as_str().to_string())),
            None => excluded.push((o.m, o.error.clone().unwrap_or_default())),
        }
    }
    let fit = fit_decay(&lengths, hyp.lyapunov_closed, excluded)?;
    Ok(DecayRun {
        outcomes,
        fit,
        hypothesis: hyp,
    })
}

pub const DECAY_COLUMNS: [&str; 7] = ["m", "E_minus", "E_plus", "length", "a_m", "eps_m", "status"];
pub const CERT_COLUMNS: [&str; 8] = ["m", "E_plus", "a_m", "eps_m", "delta_pred", "length_measured", "bound_ok", "status"];

pub fn decay_rows(outcomes: &[LabelOutcome]) -> Vec<Vec<String>> {
    outcomes
        .iter()
        .map(|o| {
            let g = o.gap.as_ref();
            let open = o.is_open();
            vec![
                o.m.to_string(),
                opt_num(g.filter(|_| open).map(|g| g.e_minus)),
                opt_num(g.filter(|_| open).map(|g| g.e_plus)),
                opt_num(g.filter(|_| open).map(|g| g.length)),
                opt_num(o.cert.as_ref().map(|c| c.a_m)),
                opt_num(o.cert.as_ref().map(|c| c.eps_m)),
                o.status().to_string(),
            ]
        })
        .collect()
}

pub fn cert_rows(outcomes: &[LabelOutcome]) -> Vec<Vec<String>> {
    outcomes
        .iter()
        .map(|o| match &o.cert {
            Some(c) => vec![
                o.m.to_string(),
                num(c.e_plus),
                num(c.a_m),
                num(c.eps_m),
                num(c.delta_pred),
                num(c.length_measured),
                c.bound_ok.to_string(),
                c.status.as_str().to_string(),
            ],
            None => {
                let mut r = vec![String::new(); CERT_COLUMNS.len()];
                r[0] = o.m.to_string();
                r[7] = o.status().to_string();
                r
            }
        })
        .collect()
}
