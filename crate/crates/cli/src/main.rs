use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ehm_cli::config::{parse_config, Format, KPolicy, LabelRange, RunConfig};
use ehm_cli::experiment::{cert_options, cert_rows, decay_experiment, decay_rows, run_labels, CERT_COLUMNS, DECAY_COLUMNS};
use ehm_cli::report::{num, opt_num, sink, table_json, write_csv, write_json};
use ehm_cli::verify::verify_suite;
use ehm_core::localization::{decay_measure, dual_eigenvector, resonances, DualPhase};
use ehm_core::operator::{closed_form_constants, lyapunov_numeric, rotation_at, CocycleSampler, Variant};
use ehm_core::reducibility::{measure_gap, normal_form_at_edge};
use ehm_core::spectrum::{label_gap, pk_growth_rate, tridiag_eigs, truncation, Flavor, M_MAX};
use ehm_core::EhmError;
use serde_json::json;

/// Spectral toolkit for the extended Harper's model.
///
/// Defaults without --config: coupling 0.2,3,0.3, golden-mean frequency at
/// depth 40, labels 1..12, tol 1e-12, rho margin 10, rho iterations 1e5 on 4
/// phases, section order auto, check grid 512, averaging grid 1024, one thread.
#[derive(Parser)]
#[command(name = "ehm", version)]
struct Cli {
    /// key=value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for label processing
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file; standard output when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long, global = true)]
    format: Option<Format>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Labels {
    /// Label range such as 1..12, overriding the configuration
    #[arg(long, allow_hyphen_values = true)]
    labels: Option<LabelRange>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Eigenvalues of a finite truncation
    Spectrum {
        #[arg(long, default_value_t = 500)]
        sites: usize,
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        /// Truncate the dual model instead
        #[arg(long)]
        dual: bool,
    },
    /// Gap edges per label
    Gaps(Labels),
    /// Lyapunov exponent at one energy
    Lyapunov {
        #[arg(long, allow_hyphen_values = true)]
        energy: f64,
        /// a, abar or m
        #[arg(long, default_value = "abar")]
        variant: String,
        #[arg(long, default_value_t = 100_000)]
        iterations: usize,
        #[arg(long, default_value_t = 4)]
        phases: usize,
        /// Use the dual coupling at energy/l2, and report the determinant growth
        #[arg(long)]
        dual: bool,
    },
    /// Fibered rotation number and gap label at one energy
    Rho {
        #[arg(long, allow_hyphen_values = true)]
        energy: f64,
    },
    /// Resonant orders of a dual phase
    Resonances {
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<f64>,
        /// Phase n alpha / 2 instead of --theta
        #[arg(long, allow_hyphen_values = true)]
        half_multiple: Option<i64>,
        #[arg(long, default_value_t = 0.5)]
        eps0: f64,
        #[arg(long, default_value_t = 1000)]
        n_max: i64,
    },
    /// Decay of a dual eigenvector between resonances
    Localize {
        #[arg(long, allow_hyphen_values = true)]
        energy: f64,
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        #[arg(long, default_value_t = 400)]
        sites: usize,
        #[arg(long, default_value_t = 3.0)]
        c0: f64,
        #[arg(long, default_value_t = 0.5)]
        eps0: f64,
    },
    /// Normal form at the upper edge of one gap
    Reduce {
        #[arg(long, allow_hyphen_values = true)]
        label: i64,
        /// auto or a fixed section order
        #[arg(long = "K", default_value = "auto")]
        k: KPolicy,
    },
    /// Gap-length certificates
    Certify(Labels),
    /// Decay of gap lengths with the label
    Decay(Labels),
    /// Invariant checks of every module
    Verify,
}

enum Failure {
    Config(String),
    Numeric(EhmError),
    Io(std::io::Error),
    Verification(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numeric(_) | Failure::Io(_) => 3,
            Failure::Verification(_) => 4,
        }
    }
}

impl From<EhmError> for Failure {
    fn from(e: EhmError) -> Self {
        Failure::Numeric(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            parse_config(&text).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::Config("--threads must be positive".into()));
        }
        cfg.threads = t;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    cfg.coupling().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn emit_table(cfg: &RunConfig, header: &[&str], rows: &[Vec<String>], extra: Option<serde_json::Value>) -> Result<(), Failure> {
    let mut w = sink(cfg.out.as_deref())?;
    match cfg.format {
        Format::Csv => write_csv(&mut w, header, rows)?,
        Format::Json => {
            let mut v = json!({ "rows": table_json(header, rows) });
            if let Some(x) = extra {
                v.as_object_mut().unwrap().extend(x.as_object().cloned().unwrap_or_default());
            }
            write_json(&mut w, &v)?
        }
    }
    Ok(())
}

fn emit_json(cfg: &RunConfig, v: &serde_json::Value) -> Result<(), Failure> {
    let mut w = sink(cfg.out.as_deref())?;
    write_json(&mut w, v)?;
    Ok(())
}

fn emit_pairs(cfg: &RunConfig, pairs: &[(&str, String)]) -> Result<(), Failure> {
    let header: Vec<&str> = pairs.iter().map(|p| p.0).collect();
    let row = vec![pairs.iter().map(|p| p.1.clone()).collect()];
    emit_table(cfg, &header, &row, None)
}

fn with_labels(mut cfg: RunConfig, l: &Labels) -> RunConfig {
    if let Some(r) = l.labels {
        cfg.labels = r;
    }
    cfg
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let cfg = load(cli)?;
    let c = cfg.coupling()?;
    let cf = cfg.continued_fraction().map_err(|e| Failure::Config(format!("frequency: {e}")))?;
    let alpha = cf.value_f64();
    match &cli.cmd {
        Cmd::Spectrum { sites, theta, dual } => {
            let cp = if *dual { c.dual() } else { c };
            let t = truncation(&cp, alpha, *theta, (0, *sites as i64 - 1), Flavor::Direct)?;
            let eigs = tridiag_eigs(&t, 1e-13)?;
            let rows: Vec<Vec<String>> = eigs.iter().enumerate().map(|(i, e)| vec![i.to_string(), num(*e)]).collect();
            emit_table(&cfg, &["index", "E"], &rows, None)
        }
        Cmd::Gaps(l) => {
            let cfg = with_labels(cfg, l);
            let out = run_labels(&cfg, false)?;
            let rows: Vec<Vec<String>> = out
                .iter()
                .map(|o| {
                    let g = o.gap.as_ref();
                    vec![
                        o.m.to_string(),
                        opt_num(g.map(|g| g.e_minus)),
                        opt_num(g.map(|g| g.e_plus)),
                        opt_num(g.map(|g| g.length)),
                        opt_num(g.map(|g| g.rho_err)),
                        g.map_or("", |g| g.edge_source.as_str()).to_string(),
                        g.map_or("error", |g| g.status.as_str()).to_string(),
                    ]
                })
                .collect();
            emit_table(&cfg, &["m", "E_minus", "E_plus", "length", "rho_err", "edge_source", "status"], &rows, None)
        }
        Cmd::Lyapunov {
            energy,
            variant,
            iterations,
            phases,
            dual,
        } => {
            let v = Variant::parse(variant).ok_or_else(|| Failure::Config(format!("unknown variant `{variant}`")))?;
            let (lyap, c_const) = closed_form_constants(&c)?;
            if *dual {
                let e = energy / c.l2;
                let est = lyapunov_numeric(&CocycleSampler::new(c.dual(), alpha, e, v), *iterations, *phases)?;
                let growth = pk_growth_rate(&c.dual(), alpha, e, 2000, 32);
                emit_pairs(
                    &cfg,
                    &[
                        ("energy", num(e)),
                        ("estimate", num(est.estimate)),
                        ("stderr", num(est.stderr)),
                        ("closed_form_lyapunov", num(lyap)),
                        ("closed_form_c", num(c_const)),
                        ("determinant_growth", num(growth)),
                    ],
                )
            } else {
                let est = lyapunov_numeric(&CocycleSampler::new(c, alpha, *energy, v), *iterations, *phases)?;
                emit_pairs(&cfg, &[("energy", num(*energy)), ("estimate", num(est.estimate)), ("stderr", num(est.stderr))])
            }
        }
        Cmd::Rho { energy } => {
            let r = rotation_at(&CocycleSampler::new(c, alpha, *energy, Variant::ABar), cfg.rho_iterations, cfg.rho_phases)?;
            let label = label_gap(r.rho, alpha, M_MAX, (3.0 * r.err).max(1e-9)).ok();
            emit_pairs(
                &cfg,
                &[
                    ("energy", num(*energy)),
                    ("rho", num(r.rho)),
                    ("err", num(r.err)),
                    ("ids", num(r.ids())),
                    ("label", label.map(|m| m.to_string()).unwrap_or_default()),
                ],
            )
        }
        Cmd::Resonances {
            theta,
            half_multiple,
            eps0,
            n_max,
        } => {
            let phase = match (theta, half_multiple) {
                (Some(t), None) => DualPhase::Real(*t),
                (None, Some(n)) => DualPhase::HalfMultiple(*n),
                _ => return Err(Failure::Config("give exactly one of --theta and --half-multiple".into())),
            };
            if !(*eps0 > 0.0) || *n_max < 1 {
                return Err(Failure::Config("--eps0 and --n-max must be positive".into()));
            }
            let rs = resonances(phase, &cf, *eps0, *n_max);
            let rows: Vec<Vec<String>> = rs.entries.iter().map(|(n, d)| vec![n.to_string(), num(*d)]).collect();
            emit_table(&cfg, &["n", "distance"], &rows, None)
        }
        Cmd::Localize {
            energy,
            theta,
            sites,
            c0,
            eps0,
        } => {
            let st = dual_eigenvector(&c, alpha, *theta, *energy, *sites, 0.05)?;
            let rs = resonances(DualPhase::Real(*theta), &cf, *eps0, *sites as i64);
            let (lyap, _) = closed_form_constants(&c)?;
            let p = decay_measure(&st.u, st.half_width, &rs, *c0, 0.0, 0.1)?;
            emit_pairs(
                &cfg,
                &[
                    ("eigenvalue", num(st.eigenvalue)),
                    ("fitted_rate", num(p.fitted_rate)),
                    ("rate_ci", num(p.rate_ci)),
                    ("prefactor", num(p.prefactor)),
                    ("closed_form_lyapunov", num(lyap)),
                ],
            )
        }
        Cmd::Reduce { label, k } => {
            let mut cfg = cfg;
            cfg.section_k = *k;
            let opts = cert_options(&cfg);
            let gap = measure_gap(&c, alpha, *label, &opts)?;
            let nf = normal_form_at_edge(&c, alpha, &gap, opts.k_max, &opts.normal_form)?;
            let coeffs = |i: usize, j: usize| -> Vec<[f64; 2]> {
                let s = &nf.b[i][j];
                s.coeffs().iter().map(|z| [z.re, z.im]).collect()
            };
            emit_json(
                &cfg,
                &json!({
                    "label": nf.label,
                    "alpha": nf.alpha,
                    "energy": nf.energy,
                    "gap": { "E_minus": gap.e_minus, "E_plus": gap.e_plus, "length": gap.length },
                    "sign": nf.sign,
                    "a_m": nf.a_m,
                    "degree": nf.degree,
                    "degree_distance": nf.degree_distance,
                    "residual": nf.residual,
                    "det_defect": nf.det_defect,
                    "theta": nf.theta_tilde.theta,
                    "n_tilde": nf.theta_tilde.n_tilde,
                    "theta_tilde": nf.theta_tilde.theta_tilde,
                    "K": nf.k_max,
                    "section_residual": nf.section_residual,
                    "min_divisor": nf.min_divisor,
                    "homological_residual": nf.homological_residual,
                    "b_period": 2,
                    "b_k_max": nf.b[0][0].k_max,
                    "b": [[coeffs(0, 0), coeffs(0, 1)], [coeffs(1, 0), coeffs(1, 1)]],
                    "finite_scale_surrogate": true,
                }),
            )
        }
        Cmd::Certify(l) => {
            let cfg = with_labels(cfg, l);
            let out = run_labels(&cfg, true)?;
            emit_table(&cfg, &CERT_COLUMNS, &cert_rows(&out), Some(json!({ "finite_scale_surrogate": true })))
        }
        Cmd::Decay(l) => {
            let cfg = with_labels(cfg, l);
            let run = decay_experiment(&cfg)?;
            eprintln!(
                "slope {} intercept {} r2 {} over {} gaps; closed-form rate {}",
                num(run.fit.slope),
                num(run.fit.intercept),
                num(run.fit.r_squared),
                run.fit.points.len(),
                num(run.fit.reference_rate)
            );
            let extra = json!({ "fit": run.fit, "hypothesis": run.hypothesis });
            emit_table(&cfg, &DECAY_COLUMNS, &decay_rows(&run.outcomes), Some(extra))
        }
        Cmd::Verify => {
            let rep = verify_suite(&cfg)?;
            emit_json(&cfg, &serde_json::to_value(&rep).expect("report serializes"))?;
            if rep.passed {
                Ok(())
            } else {
                let ids: Vec<&str> = rep.failures().iter().map(|c| c.id).collect();
                Err(Failure::Verification(ids.join(", ")))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("config error: {m}"),
                Failure::Numeric(e) => eprintln!("numerical failure: {e}"),
                Failure::Io(e) => eprintln!("io error: {e}"),
                Failure::Verification(m) => eprintln!("verification failed: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
