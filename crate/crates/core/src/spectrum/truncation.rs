use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{EhmError, Result};
use crate::operator::Coupling;

/// Which coupling fills the off-diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    /// `|c|` of the coupling itself.
    Direct,
    /// `|c|` of the dual coupling.
    Dual,
}

/// Real symmetric tridiagonal restriction to a window `[x1, x2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiTruncation {
    pub diag: Vec<f64>,
    /// `off[i]` couples sites `x1 + i` and `x1 + i + 1`.
    pub off: Vec<f64>,
    pub window: (i64, i64),
    pub flavor: Flavor,
}

impl JacobiTruncation {
    pub fn from_parts(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1));
        let n = diag.len() as i64;
        JacobiTruncation {
            diag,
            off,
            window: (0, n - 1),
            flavor: Flavor::Direct,
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let l = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let r = if i + 1 < n { self.off[i].abs() } else { 0.0 };
                self.diag[i].abs() + l + r
            })
            .fold(0.0, f64::max)
    }

    /// Sub-window by local indices `[i, j]`.
    pub fn slice(&self, i: usize, j: usize) -> JacobiTruncation {
        JacobiTruncation {
            diag: self.diag[i..=j].to_vec(),
            off: self.off[i..j].to_vec(),
            window: (self.window.0 + i as i64, self.window.0 + j as i64),
            flavor: self.flavor,
        }
    }
}

/// `2cos 2pi(theta + n alpha)` on the diagonal, `|c|(theta + n alpha)` off it.
pub fn truncation(
    coupling: &Coupling,
    alpha: f64,
    theta: f64,
    window: (i64, i64),
    flavor: Flavor,
) -> Result<JacobiTruncation> {
    let (x1, x2) = window;
    assert!(x2 >= x1, "empty window");
    let cp = match flavor {
        Flavor::Direct => *coupling,
        Flavor::Dual => coupling.dual(),
    };
    let phase = |n: i64| theta + n as f64 * alpha;
    let diag = (x1..=x2).map(|n| 2.0 * (2.0 * PI * phase(n)).cos()).collect();
    let off: Vec<f64> = (x1..x2).map(|n| cp.abs_c(alpha, phase(n))).collect();
    if off.iter().any(|&o| o < 1e-14) {
        return Err(EhmError::SingularOffDiagonal);
    }
    Ok(JacobiTruncation {
        diag,
        off,
        window,
        flavor,
    })
}

/// Complex off-diagonal `c(theta + n alpha)` of the non-symmetrized operator.
pub fn complex_off_diagonal(coupling: &Coupling, alpha: f64, theta: f64, window: (i64, i64)) -> Vec<Complex64> {
    (window.0..window.1)
        .map(|n| coupling.c(alpha, Complex64::new(theta + n as f64 * alpha, 0.0)))
        .collect()
}

/// Number of eigenvalues strictly below `e` (Sturm sign count of the LDL^T pivots).
pub fn eig_count(t: &JacobiTruncation, e: f64) -> usize {
    let pivmin = f64::MIN_POSITIVE.sqrt() * (1.0 + t.norm_bound());
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..t.len() {
        let b2 = if i > 0 { t.off[i - 1] * t.off[i - 1] } else { 0.0 };
        d = t.diag[i] - e - if i > 0 { b2 / d } else { 0.0 };
        if d.abs() < pivmin {
            d = -pivmin;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// All eigenvalues in ascending order, each bracketed to width `tol`.
pub fn tridiag_eigs(t: &JacobiTruncation, tol: f64) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(EhmError::InvalidTolerance);
    }
    let r = t.norm_bound() + 1.0;
    let mut out = Vec::with_capacity(t.len());
    split(t, -r, r, 0, t.len(), tol, &mut out);
    Ok(out)
}

fn split(t: &JacobiTruncation, lo: f64, hi: f64, c_lo: usize, c_hi: usize, tol: f64, out: &mut Vec<f64>) {
    if c_hi == c_lo {
        return;
    }
    let mid = 0.5 * (lo + hi);
    if hi - lo <= tol || mid <= lo || mid >= hi {
        out.extend(std::iter::repeat(mid).take(c_hi - c_lo));
        return;
    }
    let c_mid = eig_count(t, mid);
    split(t, lo, mid, c_lo, c_mid, tol, out);
    split(t, mid, hi, c_mid, c_hi, tol, out);
}

/// A real number stored as `sign * exp(log_abs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSigned {
    pub log_abs: f64,
    pub sign: f64,
}

impl LogSigned {
    pub fn one() -> Self {
        LogSigned {
            log_abs: 0.0,
            sign: 1.0,
        }
    }

    pub fn from_f64(v: f64) -> Self {
        LogSigned {
            log_abs: v.abs().ln(),
            sign: if v < 0.0 { -1.0 } else { 1.0 },
        }
    }

    pub fn value(&self) -> f64 {
        self.sign * self.log_abs.exp()
    }
}

/// Leading principal minors `det(T[0..i] - e)` for `i = 0..=n`, in log/sign form.
pub fn leading_minors(diag: &[f64], off: &[f64], e: f64) -> Vec<LogSigned> {
    let n = diag.len();
    let mut out = Vec::with_capacity(n + 1);
    out.push(LogSigned::one());
    // carry (prev, prevprev) with a shared scale
    let (mut p1, mut p2) = (1.0f64, 0.0f64);
    let mut scale = 0.0f64;
    for i in 0..n {
        let b2 = if i > 0 { off[i - 1] * off[i - 1] } else { 0.0 };
        let p = (diag[i] - e) * p1 - b2 * p2;
        p2 = p1;
        p1 = p;
        let m = p1.abs().max(p2.abs());
        if m > 1e100 || (m < 1e-100 && m > 0.0) {
            p1 /= m;
            p2 /= m;
            scale += m.ln();
        }
        out.push(LogSigned {
            log_abs: scale + p1.abs().ln(),
            sign: if p1 < 0.0 { -1.0 } else { 1.0 },
        });
    }
    out
}

/// `det(H^{[0,k-1]} - E)` for the truncation built from `coupling` at phase `theta`.
///
/// Pass the dual coupling to get the determinants of the dual model.
pub fn pk_determinant(coupling: &Coupling, alpha: f64, theta: f64, e: f64, k: usize) -> LogSigned {
    if k == 0 {
        return LogSigned::one();
    }
    let diag: Vec<f64> = (0..k)
        .map(|n| 2.0 * (2.0 * PI * (theta + n as f64 * alpha)).cos())
        .collect();
    let off: Vec<f64> = (0..k - 1)
        .map(|n| coupling.abs_c(alpha, theta + n as f64 * alpha))
        .collect();
    *leading_minors(&diag, &off, e).last().unwrap()
}

/// Least-squares slope of `ln|P_j|` against `j` over `k/2 <= j <= k`,
/// averaged over the phases `(i + 1/2) / phases`.
pub fn pk_growth_rate(coupling: &Coupling, alpha: f64, e: f64, k: usize, phases: usize) -> f64 {
    let phases = phases.max(1);
    let mut total = 0.0;
    for i in 0..phases {
        let theta = (i as f64 + 0.5) / phases as f64;
        let diag: Vec<f64> = (0..k)
            .map(|n| 2.0 * (2.0 * PI * (theta + n as f64 * alpha)).cos())
            .collect();
        let off: Vec<f64> = (0..k.saturating_sub(1))
            .map(|n| coupling.abs_c(alpha, theta + n as f64 * alpha))
            .collect();
        let minors = leading_minors(&diag, &off, e);
        let pts: Vec<(f64, f64)> = (k / 2..=k)
            .map(|j| (j as f64, minors[j].log_abs))
            .filter(|p| p.1.is_finite())
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        total += sxy / sxx;
    }
    total / phases as f64
}
