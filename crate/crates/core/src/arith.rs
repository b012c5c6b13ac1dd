//! Continued fractions, circle distances and Diophantine exponents.
//!
//! A frequency is carried by its partial quotients; convergents are exact
//! big integers and real values are materialized only when asked for.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{EhmError, Result};

/// Warm-up prefix of unit quotients used by [`liouville_build`].
pub const LIOUVILLE_WARMUP: usize = 6;

/// Largest quotient (in bits) that [`liouville_build`] will materialize.
pub const LIOUVILLE_BUDGET_BITS: u64 = 1 << 22;

/// `[0; a_1, a_2, ..., a_d]` with its convergents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuedFraction {
    quotients: Vec<BigUint>,
    convergents: Vec<(BigUint, BigUint)>,
}

impl ContinuedFraction {
    pub fn new(quotients: Vec<BigUint>) -> Result<Self> {
        if quotients.is_empty() || quotients.iter().any(|a| a.is_zero()) {
            return Err(EhmError::InsufficientDepth);
        }
        let convergents = convergents(&quotients);
        Ok(ContinuedFraction {
            quotients,
            convergents,
        })
    }

    pub fn from_u64(quotients: &[u64]) -> Result<Self> {
        Self::new(quotients.iter().map(|&a| BigUint::from(a)).collect())
    }

    /// Golden mean `[1, 1, 1, ...]`.
    pub fn golden(depth: usize) -> Self {
        Self::from_u64(&vec![1; depth.max(1)]).expect("unit quotients")
    }

    pub fn depth(&self) -> usize {
        self.quotients.len()
    }

    pub fn quotients(&self) -> &[BigUint] {
        &self.quotients
    }

    /// `(p_n, q_n)` for `n = 1..=depth`.
    pub fn convergents(&self) -> &[(BigUint, BigUint)] {
        &self.convergents
    }

    /// `q_n` with `q_0 = 1`.
    pub fn q(&self, n: usize) -> BigUint {
        if n == 0 {
            BigUint::one()
        } else {
            self.convergents[n - 1].1.clone()
        }
    }

    /// `p_n` with `p_0 = 0`.
    pub fn p(&self, n: usize) -> BigUint {
        if n == 0 {
            BigUint::zero()
        } else {
            self.convergents[n - 1].0.clone()
        }
    }

    /// The deepest convergent, which is the value this prefix stands for.
    pub fn value_ratio(&self) -> (&BigUint, &BigUint) {
        let (p, q) = self.convergents.last().expect("nonempty");
        (p, q)
    }

    pub fn value_f64(&self) -> f64 {
        let (p, q) = self.value_ratio();
        ratio_to_f64(&BigInt::from(p.clone()), &BigInt::from(q.clone()))
    }

    /// Fractional part of `n * alpha` in `[0, 1)`, exact up to final rounding.
    pub fn frac_multiple(&self, n: i64) -> f64 {
        let (p, q) = self.value_ratio();
        let q = BigInt::from(q.clone());
        let r = (BigInt::from(n) * BigInt::from(p.clone())).mod_floor(&q);
        ratio_to_f64(&r, &q)
    }

    /// `‖n alpha‖` computed from exact integers.
    pub fn circle_dist_multiple(&self, n: i64) -> f64 {
        let (p, q) = self.value_ratio();
        let q = BigInt::from(q.clone());
        let r = (BigInt::from(n) * BigInt::from(p.clone())).mod_floor(&q);
        let s = &q - &r;
        ratio_to_f64(&r.min(s), &q)
    }

    /// Quotients as u64 where they fit.
    pub fn small_quotients(&self) -> Vec<Option<u64>> {
        self.quotients.iter().map(|a| a.to_u64()).collect()
    }
}

/// Convergents from the recurrence with seeds `(p_{-1}, q_{-1}) = (1, 0)`, `(p_0, q_0) = (0, 1)`.
pub fn convergents(quotients: &[BigUint]) -> Vec<(BigUint, BigUint)> {
    let (mut p2, mut q2) = (BigUint::one(), BigUint::zero());
    let (mut p1, mut q1) = (BigUint::zero(), BigUint::one());
    let mut out = Vec::with_capacity(quotients.len());
    for a in quotients {
        let p = a * &p1 + &p2;
        let q = a * &q1 + &q2;
        p2 = std::mem::replace(&mut p1, p.clone());
        q2 = std::mem::replace(&mut q1, q.clone());
        out.push((p, q));
    }
    out
}

/// `min_k |x - k|`.
pub fn circle_norm(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Signed representative of `x` modulo 1 in `[-1/2, 1/2)`.
pub fn circle_signed(x: f64) -> f64 {
    let r = x - x.round();
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// Correctly scaled `num / den` for arbitrarily large integers.
pub fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let sign = if num.is_negative() != den.is_negative() {
        -1.0
    } else {
        1.0
    };
    let n = num.abs();
    let d = den.abs();
    let shift = 64i64 - (n.bits() as i64 - d.bits() as i64);
    let q = if shift >= 0 {
        (n << shift as usize) / d
    } else {
        n / (d << (-shift) as usize)
    };
    let m = q.to_f64().unwrap_or(f64::INFINITY);
    sign * m * 2f64.powi(-(shift as i32))
}

/// Natural log of a positive big integer.
pub fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().map(f64::ln).unwrap_or(f64::INFINITY);
    }
    let shift = bits - 64;
    let top = (x >> shift as usize).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Continued fraction of a double, using the double's own rounding as the error budget.
pub fn cf_from_real(x: f64, depth: usize) -> Result<ContinuedFraction> {
    if !(x > 0.0 && x < 1.0) {
        return Err(EhmError::RationalInput);
    }
    let (m, e) = decode(x);
    let num = BigUint::from(m);
    let den = BigUint::one() << e as usize;
    gauss_expand(num, den, x * f64::EPSILON * 0.5, depth)
}

/// Continued fraction of a decimal literal like `0.41421356237309504880`.
///
/// The literal is taken as exact to half a unit in its last digit.
pub fn cf_from_decimal(text: &str, depth: usize) -> Result<ContinuedFraction> {
    let t = text.trim();
    let frac = t
        .strip_prefix("0.")
        .or_else(|| t.strip_prefix('.'))
        .ok_or(EhmError::RationalInput)?;
    if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(EhmError::RationalInput);
    }
    let num: BigUint = frac.parse().map_err(|_| EhmError::RationalInput)?;
    if num.is_zero() {
        return Err(EhmError::RationalInput);
    }
    let den = num_traits::pow(BigUint::from(10u32), frac.len());
    gauss_expand(num, den, 0.5 * 10f64.powi(-(frac.len() as i32)), depth)
}

fn decode(x: f64) -> (u64, u32) {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let mant = if exp == 0 {
        (bits & 0xf_ffff_ffff_ffff) << 1
    } else {
        (bits & 0xf_ffff_ffff_ffff) | 0x10_0000_0000_0000
    };
    // x = mant * 2^(exp - 1075), and x < 1 so the shift is positive
    (mant, (1075 - exp) as u32)
}

fn gauss_expand(
    mut num: BigUint,
    mut den: BigUint,
    mut err: f64,
    depth: usize,
) -> Result<ContinuedFraction> {
    let mut quotients = Vec::with_capacity(depth);
    for _ in 0..depth {
        if num.is_zero() {
            return Err(EhmError::RationalInput);
        }
        let y = ratio_to_f64(&BigInt::from(num.clone()), &BigInt::from(den.clone()));
        if err >= y {
            return Err(EhmError::PrecisionExhausted);
        }
        let (a, r) = den.div_rem(&num);
        let spread = err / (y * y - err * err);
        let frac = ratio_to_f64(&BigInt::from(r.clone()), &BigInt::from(num.clone()));
        if r.is_zero() && quotients.len() + 1 < depth {
            return Err(EhmError::RationalInput);
        }
        if frac <= spread || 1.0 - frac <= spread {
            return Err(EhmError::PrecisionExhausted);
        }
        quotients.push(a);
        den = std::mem::replace(&mut num, r);
        err = spread;
    }
    ContinuedFraction::new(quotients)
}

/// Finite-depth surrogate for `beta(alpha) = limsup ln(q_{n+1}) / q_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaEstimate {
    /// `(n, ln(q_{n+1}) / q_n)` for `n = 1..depth-1`.
    pub samples: Vec<(usize, f64)>,
    pub tail_start: usize,
    pub tail_sup: f64,
}

impl BetaEstimate {
    pub const LABEL: &'static str = "finite-depth tail supremum";
}

/// Default tail window: the last half of the computed levels.
pub fn default_tail_start(cf: &ContinuedFraction) -> usize {
    (cf.depth() / 2).max(1)
}

pub fn beta_estimate(cf: &ContinuedFraction, tail_start: usize) -> Result<BetaEstimate> {
    let d = cf.depth();
    if d < tail_start + 2 {
        return Err(EhmError::InsufficientDepth);
    }
    let mut samples = Vec::with_capacity(d);
    for n in 1..d {
        let qn = cf.q(n);
        let qn1 = cf.q(n + 1);
        let v = match qn.to_f64() {
            Some(q) if q.is_finite() => ln_big(&qn1) / q,
            _ => 0.0,
        };
        samples.push((n, v));
    }
    let tail_sup = samples
        .iter()
        .filter(|(n, _)| *n >= tail_start)
        .map(|&(_, v)| v)
        .fold(0.0, f64::max);
    Ok(BetaEstimate {
        samples,
        tail_start,
        tail_sup,
    })
}

/// Frequency with prescribed exponent: unit warm-up, then `a_{n+1} = ceil(e^{beta q_n} / q_n)`.
pub fn liouville_build(target_beta: f64, depth: usize) -> Result<ContinuedFraction> {
    if !(target_beta > 0.0) || depth < 4 {
        return Err(EhmError::InsufficientDepth);
    }
    let mut quotients: Vec<BigUint> = Vec::with_capacity(depth);
    let (mut q2, mut q1) = (BigUint::zero(), BigUint::one());
    for n in 0..depth {
        let a = if n < LIOUVILLE_WARMUP {
            BigUint::one()
        } else {
            liouville_quotient(target_beta, &q1)?
        };
        let q = &a * &q1 + &q2;
        q2 = std::mem::replace(&mut q1, q);
        quotients.push(a);
    }
    ContinuedFraction::new(quotients)
}

fn liouville_quotient(beta: f64, q: &BigUint) -> Result<BigUint> {
    let qf = q.to_f64().filter(|v| v.is_finite()).ok_or(EhmError::BudgetExceeded)?;
    // log2 of e^{beta q} / q
    let t = beta * qf / std::f64::consts::LN_2 - qf.log2();
    if t > LIOUVILLE_BUDGET_BITS as f64 {
        return Err(EhmError::BudgetExceeded);
    }
    if t < 60.0 {
        let v = (beta * qf).exp() / qf;
        return Ok(BigUint::from(v.ceil().max(1.0) as u64));
    }
    let whole = t.floor();
    let mant = (2f64.powf(t - whole) * (1u64 << 52) as f64).ceil() as u64;
    Ok(BigUint::from(mant) << (whole as usize - 52))
}

/// `‖k alpha‖` from exact integers; `|k|` must stay below the deepest `q`.
pub fn best_approx_distance(cf: &ContinuedFraction, k: i64) -> Result<f64> {
    if k == 0 {
        return Err(EhmError::ZeroIndex);
    }
    let (_, q) = cf.value_ratio();
    if BigUint::from(k.unsigned_abs()) >= *q {
        return Err(EhmError::PrecisionExhausted);
    }
    Ok(cf.circle_dist_multiple(k))
}

/// `p_n q_{n-1} - p_{n-1} q_n` as an exact integer.
pub fn determinant_identity(cf: &ContinuedFraction, n: usize) -> BigInt {
    let pn = BigInt::from(cf.p(n));
    let qn = BigInt::from(cf.q(n));
    let pm = BigInt::from(cf.p(n - 1));
    let qm = BigInt::from(cf.q(n - 1));
    pn * qm - pm * qn
}
