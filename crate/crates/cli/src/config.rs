use std::fmt;
use std::path::PathBuf;

use ehm_core::arith::{cf_from_real, liouville_build};
use ehm_core::operator::Coupling;
use ehm_core::{ContinuedFraction, EhmError};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: {key}: {msg}")]
    BadValue { line: usize, key: String, msg: String },
    #[error("frequency required")]
    FrequencyRequired,
    #[error("{0}")]
    Invalid(String),
}

/// How the frequency is given.
#[derive(Debug, Clone, PartialEq)]
pub enum AlphaSpec {
    Golden,
    /// Partial quotients `a_1, a_2, ...`.
    Cf(Vec<u64>),
    /// A real number expanded to `depth` quotients.
    Real(f64),
    /// Liouville number with the given target `beta`.
    Liouville(f64),
}

impl AlphaSpec {
    pub fn continued_fraction(&self, depth: usize) -> Result<ContinuedFraction, EhmError> {
        match self {
            AlphaSpec::Golden => Ok(ContinuedFraction::golden(depth)),
            AlphaSpec::Cf(q) => ContinuedFraction::from_u64(q),
            AlphaSpec::Real(x) => cf_from_real(*x, depth),
            AlphaSpec::Liouville(beta) => liouville_build(*beta, depth),
        }
    }
}

impl fmt::Display for AlphaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaSpec::Golden => write!(f, "golden"),
            AlphaSpec::Cf(q) => {
                let parts: Vec<String> = q.iter().map(|a| a.to_string()).collect();
                write!(f, "cf:{}", parts.join(","))
            }
            AlphaSpec::Real(x) => write!(f, "real:{x:?}"),
            AlphaSpec::Liouville(b) => write!(f, "liouville:{b:?}"),
        }
    }
}

/// Inclusive range of gap labels, never containing 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelRange {
    pub start: i64,
    pub end: i64,
}

impl LabelRange {
    pub fn new(start: i64, end: i64) -> Result<Self, String> {
        if start > end {
            return Err(format!("empty label range {start}..{end}"));
        }
        if start <= 0 && end >= 0 {
            return Err("label range contains 0".into());
        }
        Ok(LabelRange { start, end })
    }

    pub fn labels(&self) -> Vec<i64> {
        (self.start..=self.end).collect()
    }
}

impl std::str::FromStr for LabelRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<i64>().map_err(|_| format!("bad label `{}`", t.trim()));
        match s.split_once("..") {
            Some((a, b)) => LabelRange::new(num(a)?, num(b)?),
            None => {
                let m = num(s)?;
                LabelRange::new(m, m)
            }
        }
    }
}

impl fmt::Display for LabelRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KPolicy {
    /// Double K until the section residual stops improving.
    Auto,
    Fixed(usize),
}

impl std::str::FromStr for KPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(KPolicy::Auto);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(KPolicy::Fixed(k)),
            _ => Err(format!("expected `auto` or a positive order, got `{s}`")),
        }
    }
}

impl fmt::Display for KPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KPolicy::Auto => write!(f, "auto"),
            KPolicy::Fixed(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("expected csv or json, got `{s}`")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Everything a run needs.
///
/// Text form, one `key=value` per line, `#` starts a comment:
///
/// ```text
/// coupling=0.2,3,0.3         # l1,l2,l3
/// alpha=golden               # golden | cf:1,2,2 | real:0.4142 | liouville:0.5  (required)
/// depth=40                   # continued-fraction depth
/// labels=1..12
/// tol=1e-12                  # energy tolerance of the edge certificate
/// rho_margin=10
/// rho_iterations=100000
/// rho_phases=4
/// section_k=auto             # auto | fixed order
/// check_grid=512
/// averaging_grid=1024
/// threads=1
/// seed=1
/// format=csv
/// out=path                   # optional
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub coupling: (f64, f64, f64),
    pub alpha: AlphaSpec,
    pub depth: usize,
    pub labels: LabelRange,
    pub tol: f64,
    pub rho_margin: f64,
    pub rho_iterations: usize,
    pub rho_phases: usize,
    pub section_k: KPolicy,
    pub check_grid: usize,
    pub averaging_grid: usize,
    pub threads: usize,
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            coupling: (0.2, 3.0, 0.3),
            alpha: AlphaSpec::Golden,
            depth: 40,
            labels: LabelRange { start: 1, end: 12 },
            tol: 1e-12,
            rho_margin: 10.0,
            rho_iterations: 100_000,
            rho_phases: 4,
            section_k: KPolicy::Auto,
            check_grid: 512,
            averaging_grid: 1024,
            threads: 1,
            seed: 1,
            format: Format::Csv,
            out: None,
        }
    }
}

const KEYS: &[&str] = &[
    "coupling",
    "alpha",
    "depth",
    "labels",
    "tol",
    "rho_margin",
    "rho_iterations",
    "rho_phases",
    "section_k",
    "check_grid",
    "averaging_grid",
    "threads",
    "seed",
    "format",
    "out",
];

fn positive_f64(v: &str) -> Result<f64, String> {
    match v.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        Ok(_) => Err(format!("must be positive, got `{v}`")),
        Err(_) => Err(format!("not a number: `{v}`")),
    }
}

fn positive_usize(v: &str) -> Result<usize, String> {
    match v.parse::<usize>() {
        Ok(x) if x > 0 => Ok(x),
        _ => Err(format!("expected a positive integer, got `{v}`")),
    }
}

fn parse_coupling(v: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err("expected three comma-separated numbers".into());
    }
    let num = |t: &str| t.parse::<f64>().map_err(|_| format!("not a number: `{t}`"));
    let c = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    Coupling::new(c.0, c.1, c.2).map_err(|e| e.to_string())?;
    Ok(c)
}

fn parse_alpha(v: &str) -> Result<AlphaSpec, String> {
    if v == "golden" {
        return Ok(AlphaSpec::Golden);
    }
    let (kind, rest) = v.split_once(':').ok_or_else(|| format!("unknown frequency `{v}`"))?;
    match kind {
        "cf" => {
            let q: Result<Vec<u64>, _> = rest.split(',').map(|t| t.trim().parse::<u64>()).collect();
            match q {
                Ok(q) if !q.is_empty() && q.iter().all(|&a| a >= 1) => Ok(AlphaSpec::Cf(q)),
                _ => Err("partial quotients must be positive integers".into()),
            }
        }
        "real" => match rest.parse::<f64>() {
            Ok(x) if x > 0.0 && x < 1.0 => Ok(AlphaSpec::Real(x)),
            _ => Err(format!("expected a real in (0,1), got `{rest}`")),
        },
        "liouville" => positive_f64(rest).map(AlphaSpec::Liouville),
        _ => Err(format!("unknown frequency kind `{kind}`")),
    }
}

impl RunConfig {
    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "coupling" => self.coupling = parse_coupling(v)?,
            "alpha" => self.alpha = parse_alpha(v)?,
            "depth" => self.depth = positive_usize(v)?,
            "labels" => self.labels = v.parse()?,
            "tol" => self.tol = positive_f64(v)?,
            "rho_margin" => self.rho_margin = positive_f64(v)?,
            "rho_iterations" => self.rho_iterations = positive_usize(v)?,
            "rho_phases" => self.rho_phases = positive_usize(v)?,
            "section_k" => self.section_k = v.parse()?,
            "check_grid" => self.check_grid = positive_usize(v)?,
            "averaging_grid" => self.averaging_grid = positive_usize(v)?,
            "threads" => self.threads = positive_usize(v)?,
            "seed" => self.seed = v.parse().map_err(|_| format!("expected an integer, got `{v}`"))?,
            "format" => self.format = v.parse()?,
            "out" => {
                if v.is_empty() {
                    return Err("empty path".into());
                }
                self.out = Some(PathBuf::from(v));
            }
            _ => unreachable!("key list checked by the caller"),
        }
        Ok(())
    }

    pub fn coupling(&self) -> Result<Coupling, EhmError> {
        Coupling::new(self.coupling.0, self.coupling.1, self.coupling.2)
    }

    pub fn continued_fraction(&self) -> Result<ContinuedFraction, EhmError> {
        self.alpha.continued_fraction(self.depth)
    }

    /// Canonical text form; [`parse_config`] reads it back unchanged.
    pub fn serialize(&self) -> String {
        let (a, b, c) = self.coupling;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push('=');
            s.push_str(&v);
            s.push('\n');
        };
        put("coupling", format!("{a:?},{b:?},{c:?}"));
        put("alpha", self.alpha.to_string());
        put("depth", self.depth.to_string());
        put("labels", self.labels.to_string());
        put("tol", format!("{:?}", self.tol));
        put("rho_margin", format!("{:?}", self.rho_margin));
        put("rho_iterations", self.rho_iterations.to_string());
        put("rho_phases", self.rho_phases.to_string());
        put("section_k", self.section_k.to_string());
        put("check_grid", self.check_grid.to_string());
        put("averaging_grid", self.averaging_grid.to_string());
        put("threads", self.threads.to_string());
        put("seed", self.seed.to_string());
        put("format", self.format.to_string());
        if let Some(p) = &self.out {
            put("out", p.display().to_string());
        }
        s
    }
}

/// Reads a configuration; keys left out keep their defaults, except the frequency.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut seen: Vec<&str> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body.split_once('=').ok_or_else(|| ConfigError::Malformed {
            line,
            text: raw.trim().to_string(),
        })?;
        let (k, v) = (k.trim(), v.trim());
        let key = *KEYS.iter().find(|&&x| x == k).ok_or_else(|| ConfigError::UnknownKey {
            line,
            key: k.to_string(),
        })?;
        if seen.contains(&key) {
            return Err(ConfigError::Duplicate {
                line,
                key: key.to_string(),
            });
        }
        seen.push(key);
        cfg.set(key, v).map_err(|msg| ConfigError::BadValue {
            line,
            key: key.to_string(),
            msg,
        })?;
    }
    if !seen.contains(&"alpha") {
        return Err(ConfigError::FrequencyRequired);
    }
    Ok(cfg)
}
