use std::f64::consts::PI;

use ehm_core::arith::{determinant_identity, liouville_build};
use ehm_core::localization::{inverse_iteration, kth_eigenvalue, shifted_solve};
use ehm_core::operator::{closed_form_constants, lyapunov_numeric, rotation_at, CocycleSampler, Coupling, Variant};
use ehm_core::reducibility::{
    averaging_report, degree, eval_matrix, homological_solve, measure_gap, normal_form_at_edge, FourierMatrix, FourierSeries,
};
use ehm_core::spectrum::{
    dual_band_pair, green_local, ids, poisson_residual, tridiag_eigs, truncation, BandOptions, Flavor, JacobiTruncation,
};
use ehm_core::{ContinuedFraction, Result};
use num_bigint::BigInt;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::experiment::cert_options;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: &'static str,
    pub description: &'static str,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Set for checks standing in for an asymptotic statement.
    pub finite_scale_surrogate: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Check ids in report order.
pub const CHECK_IDS: [&str; 10] = [
    "arith.determinant_identity",
    "sturm.free_laplacian",
    "green.cramer",
    "green.poisson",
    "homological.residual",
    "duality.band_scaling",
    "rotation.ids_consistency",
    "lyapunov.closed_form",
    "averaging.trace_identity",
    "degree.additivity",
];

struct Plan {
    id: &'static str,
    description: &'static str,
    expected: f64,
    tolerance: f64,
    surrogate: bool,
}

fn run(s: Plan, observe: impl FnOnce() -> Result<f64>) -> Check {
    let (observed, note) = match observe() {
        Ok(v) => (v, None),
        Err(e) => (f64::NAN, Some(e.to_string())),
    };
    Check {
        id: s.id,
        description: s.description,
        observed,
        expected: s.expected,
        tolerance: s.tolerance,
        passed: (observed - s.expected).abs() <= s.tolerance,
        finite_scale_surrogate: s.surrogate,
        note,
    }
}

fn determinants(cf: &ContinuedFraction) -> f64 {
    let one = BigInt::from(1);
    let bad = (1..cf.depth())
        .filter(|&n| {
            let d = determinant_identity(cf, n);
            d != one && d != -one.clone()
        })
        .count();
    bad as f64
}

fn free_laplacian() -> Result<f64> {
    let n = 200;
    let t = JacobiTruncation::from_parts(vec![0.0; n], vec![1.0; n - 1]);
    let got = tridiag_eigs(&t, 1e-14)?;
    let mut want: Vec<f64> = (1..=n).map(|j| 2.0 * (PI * j as f64 / (n + 1) as f64).cos()).collect();
    want.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

fn green_cramer(c: &Coupling, alpha: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let len: i64 = rng.gen_range(1..=12);
        let start: i64 = rng.gen_range(-50..50);
        let th: f64 = rng.gen();
        let t = truncation(c, alpha, th, (start, start + len - 1), Flavor::Direct)?;
        let e: f64 = rng.gen_range(-6.0..6.0);
        let n = t.len();
        for j in 0..n {
            let mut b = vec![0.0; n];
            b[j] = 1.0;
            let col = shifted_solve(&t, e, &b);
            for (i, want) in col.iter().enumerate() {
                let got = green_local(&t, e, i, j, 1e-12)?;
                worst = worst.max((got - want).abs() / want.abs().max(1e-300));
            }
        }
    }
    Ok(worst)
}

fn poisson(c: &Coupling, alpha: f64) -> Result<f64> {
    let t = truncation(c, alpha, 0.123, (0, 119), Flavor::Direct)?;
    let mut worst = 0.0f64;
    for k in [10, 60, 100] {
        let ev = kth_eigenvalue(&t, k);
        let (u, _) = inverse_iteration(&t, ev);
        worst = worst.max(poisson_residual(&t, &u, ev, 30, 41, 1e-13)?);
    }
    Ok(worst)
}

fn homological(alpha: f64) -> Result<f64> {
    let nu = FourierSeries::from_fn(
        |x| Complex64::new((2.0 * PI * x).cos().exp() + 0.3 * (4.0 * PI * x).sin(), 0.0),
        1,
        64,
        1024,
    );
    Ok(homological_solve(&nu, alpha, 64, 1e-10)?.residual)
}

fn duality(c: &Coupling, cf: &ContinuedFraction) -> Result<f64> {
    let n = (1..=cf.depth()).find(|&n| cf.q(n) >= 13u32.into()).unwrap_or(cf.depth());
    let p: u64 = cf.p(n).try_into().unwrap_or(8);
    let q: u64 = cf.q(n).try_into().unwrap_or(13);
    let (direct, dual) = dual_band_pair(c, p, q, &BandOptions::default())?;
    if direct.len() != dual.len() {
        return Ok(f64::INFINITY);
    }
    Ok(direct
        .iter()
        .zip(&dual)
        .map(|(a, b)| (a.0 - b.0).abs().max((a.1 - b.1).abs()))
        .fold(0.0, f64::max))
}

fn ids_rotation(c: &Coupling, alpha: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for e in [-5.0, -2.5, 0.1, 2.5, 5.0] {
        let n = ids(c, alpha, e, 1000, 4)?;
        let r = rotation_at(&CocycleSampler::new(*c, alpha, e, Variant::ABar), 20_000, 4)?;
        worst = worst.max((n - r.ids()).abs());
    }
    Ok(worst)
}

fn lyapunov_dual(c: &Coupling, alpha: f64) -> Result<f64> {
    let (l, _) = closed_form_constants(c)?;
    let d = c.dual();
    let t = truncation(&d, alpha, 0.1, (0, 399), Flavor::Direct)?;
    let s = CocycleSampler::new(d, alpha, kth_eigenvalue(&t, 200), Variant::A);
    let est = lyapunov_numeric(&s, 20_000, 4)?;
    Ok((est.estimate - l).abs() / l)
}

fn trace_identity(cfg: &RunConfig, c: &Coupling, alpha: f64) -> Result<f64> {
    let opts = cert_options(cfg);
    let gap = measure_gap(c, alpha, 2, &opts)?;
    let nf = normal_form_at_edge(c, alpha, &gap, opts.k_max, &opts.normal_form)?;
    Ok(averaging_report(&nf, c, alpha, &opts.averaging)?.trace_defect)
}

fn rotation_matrix(turns: f64, k: usize) -> FourierMatrix {
    let m = 8 * (2 * k + 1);
    let s = |g: &dyn Fn(f64) -> f64| FourierSeries::from_fn(|x| Complex64::new(g(x), 0.0), 2, 2 * k, 2 * m);
    let a = move |x: f64| PI * turns * x + 0.2 * (PI * x).sin();
    [
        [s(&|x| a(x).cos()), s(&|x| -a(x).sin())],
        [s(&|x| a(x).sin()), s(&|x| a(x).cos())],
    ]
}

fn degree_additivity() -> Result<f64> {
    let mut worst = 0.0f64;
    for (p, q) in [(1, 2), (-3, 1), (2, 2)] {
        let (a, b) = (rotation_matrix(p as f64, 8), rotation_matrix(q as f64, 8));
        let k = 32;
        let prod = |i: usize, j: usize| {
            FourierSeries::from_fn(
                |x| {
                    let m = eval_matrix(&a, x) * eval_matrix(&b, x);
                    Complex64::new(m[(i, j)], 0.0)
                },
                2,
                k,
                8 * (2 * k + 1),
            )
        };
        let ab: FourierMatrix = [[prod(0, 0), prod(0, 1)], [prod(1, 0), prod(1, 1)]];
        let (da, db, dab) = (degree(&a, 4096)?.0, degree(&b, 4096)?.0, degree(&ab, 4096)?.0);
        worst = worst.max((dab - da - db).abs() as f64);
        worst = worst.max(((da - p) as f64).abs());
    }
    Ok(worst)
}

/// Runs every check once, in [`CHECK_IDS`] order.
pub fn verify_suite(cfg: &RunConfig) -> Result<VerifyReport> {
    let c = cfg.coupling()?;
    let cf = cfg.continued_fraction()?;
    let alpha = cf.value_f64();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let plan = |id, description, expected, tolerance, surrogate| Plan {
        id,
        description,
        expected,
        tolerance,
        surrogate,
    };
    let checks = vec![
        run(
            plan(CHECK_IDS[0], "convergent determinants equal +-1 (golden depth 40, Liouville depth 8); count of failures", 0.0, 0.0, false),
            || Ok(determinants(&ContinuedFraction::golden(40)) + determinants(&liouville_build(0.5, 8)?)),
        ),
        run(plan(CHECK_IDS[1], "bisection eigenvalues of the free 200-site Laplacian vs 2cos(pi j/201)", 0.0, 1e-12, false), free_laplacian),
        run(
            plan(CHECK_IDS[2], "Cramer Green's function vs pivoted solve, 200 windows of length <= 12, relative", 0.0, 1e-9, false),
            || green_cramer(&c, alpha, &mut rng),
        ),
        run(plan(CHECK_IDS[3], "boundary representation on exact truncation eigenvectors", 0.0, 1e-8, false), || poisson(&c, alpha)),
        run(plan(CHECK_IDS[4], "homological equation grid residual at K=64", 0.0, 1e-10, false), || homological(alpha)),
        run(
            plan(CHECK_IDS[5], "band edges of the model vs l2 times the dual bands at the first convergent with q >= 13", 0.0, 1e-6, false),
            || duality(&c, &cf),
        ),
        run(
            plan(CHECK_IDS[6], "|ids - (1 - 2 rho)| at five energies, N=1000", 0.0, 5e-3, true),
            || ids_rotation(&c, alpha),
        ),
        run(
            plan(CHECK_IDS[7], "dual transfer-matrix Lyapunov exponent vs closed form, relative", 0.0, 0.02, true),
            || lyapunov_dual(&c, alpha),
        ),
        run(
            plan(CHECK_IDS[8], "|Trace(P + eps_m [P~]) - (2 - eps_m a_m [R11^2])| at the upper edge of gap 2", 0.0, 1e-12, false),
            || trace_identity(cfg, &c, alpha),
        ),
        run(plan(CHECK_IDS[9], "deg(AB) - deg(A) - deg(B) for rotation loops", 0.0, 0.0, false), degree_additivity),
    ];
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { checks, passed })
}
