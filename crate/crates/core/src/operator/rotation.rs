use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;

use super::cocycle::CocycleSampler;
use crate::error::{EhmError, Result};

/// A real cocycle that knows how to advance a lifted projective angle.
pub trait ProjectiveCocycle: Sync {
    fn alpha(&self) -> f64;

    fn matrix(&self, x: f64) -> Result<Matrix2<f64>>;

    /// Lifted angle of `matrix(x) * (cos phi, sin phi)`.
    ///
    /// The default tracks the vector angle, picks the branch nearest to `phi`
    /// and refuses jumps above `pi/2`.
    fn lift(&self, x: f64, phi: f64) -> Result<f64> {
        let m = self.matrix(x)?;
        let (s, c) = phi.sin_cos();
        let w = m * nalgebra::Vector2::new(c, s);
        let raw = w[1].atan2(w[0]);
        let next = raw + ((phi - raw) / (2.0 * PI)).round() * 2.0 * PI;
        if (next - phi).abs() > FRAC_PI_2 {
            return Err(EhmError::LiftFailure);
        }
        Ok(next)
    }

    /// Feeds the lifted-angle increments along the orbit of `x0` to `visit`.
    fn orbit(&self, x0: f64, n: usize, visit: &mut dyn FnMut(usize, f64)) -> Result<()> {
        let alpha = self.alpha();
        let mut x = x0;
        let mut phi = START_ANGLE;
        for k in 0..n {
            let next = self.lift(x, phi)?;
            visit(k, next - phi);
            phi = next;
            x += alpha;
            if x >= 1.0 {
                x -= 1.0;
            }
            // only increments matter
            if phi.abs() > 1e6 {
                phi -= (phi / PI).round() * PI;
            }
        }
        Ok(())
    }
}

/// Initial lifted angle of every orbit.
pub const START_ANGLE: f64 = 0.3;
/// Steps between exact re-evaluations of the phase in the fast orbit.
const RESYNC_EVERY: usize = 1024;

/// Same matrix at every phase.
#[derive(Debug, Clone, Copy)]
pub struct ConstantCocycle {
    pub matrix: Matrix2<f64>,
    pub alpha: f64,
}

impl ConstantCocycle {
    /// Rotation by `2 pi t`.
    pub fn rotation(t: f64, alpha: f64) -> Self {
        let (s, c) = (2.0 * PI * t).sin_cos();
        ConstantCocycle {
            matrix: Matrix2::new(c, -s, s, c),
            alpha,
        }
    }
}

impl ProjectiveCocycle for ConstantCocycle {
    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn matrix(&self, _x: f64) -> Result<Matrix2<f64>> {
        Ok(self.matrix)
    }
}

/// Real-phase unimodular cocycle with the exact shear/quarter-turn/scaling lift.
#[derive(Debug, Clone, Copy)]
pub struct RenormalizedCocycle(pub CocycleSampler);

impl ProjectiveCocycle for RenormalizedCocycle {
    fn alpha(&self) -> f64 {
        self.0.alpha
    }

    fn matrix(&self, x: f64) -> Result<Matrix2<f64>> {
        self.0.step_real(x)
    }

    #[inline]
    fn lift(&self, x: f64, phi: f64) -> Result<f64> {
        // [[t, -b], [a, 0]] = diag(b, a) * quarter turn * [[1, 0], [-t/b, 1]]
        let s = &self.0;
        let a = s.coupling.abs_c(s.alpha, x);
        let b = s.coupling.abs_c(s.alpha, x - s.alpha);
        let t = s.energy - 2.0 * (2.0 * PI * x).cos();
        let k = (phi / PI).round();
        let psi = phi - k * PI;
        let sheared = k * PI + (psi.tan() - t / b).atan();
        let turned = sheared + FRAC_PI_2;
        let j = (turned / PI).round();
        let chi = turned - j * PI;
        Ok(j * PI + ((a / b) * chi.tan()).atan())
    }

    /// Same factorization carried on the slope `v = tan(phi)`:
    /// the shear gives `u = v - t/b`, the turn and scaling give `v' = -a/(b u)`,
    /// and the lifted angle advances by `pi [u > 0] + atan(v') - atan(v)`.
    fn orbit(&self, x0: f64, n: usize, visit: &mut dyn FnMut(usize, f64)) -> Result<()> {
        let s = &self.0;
        let cp = &s.coupling;
        let alpha = s.alpha;
        let turn = Complex64::from_polar(1.0, 2.0 * PI * alpha);
        let half = Complex64::from_polar(1.0, PI * alpha);
        let (sum, diff) = (cp.l1 + cp.l3, cp.l3 - cp.l1);
        let mut x = x0;
        let mut z = Complex64::from_polar(1.0, 2.0 * PI * x);
        let mut b = cp.abs_c(alpha, x - alpha);
        let mut v = START_ANGLE.tan();
        let mut at = START_ANGLE;
        for k in 0..n {
            if k % RESYNC_EVERY == 0 {
                z = Complex64::from_polar(1.0, 2.0 * PI * x);
            }
            let w = z * half;
            let a = (cp.l2 + sum * w.re).hypot(diff * w.im);
            let t = s.energy - 2.0 * z.re;
            let mut u = v - t / b;
            if u == 0.0 {
                u = f64::MIN_POSITIVE;
            }
            let vn = -a / (b * u);
            let an = vn.atan();
            visit(k, if u > 0.0 { PI } else { 0.0 } + an - at);
            v = vn;
            at = an;
            b = a;
            z *= turn;
            x += alpha;
            if x >= 1.0 {
                x -= 1.0;
            }
        }
        Ok(())
    }
}

/// Rotation number with its error estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationEstimate {
    pub rho: f64,
    pub err: f64,
    pub per_phase: Vec<f64>,
}

impl RotationEstimate {
    /// Integrated density of states under `N(E) = 1 - 2 rho(E)`.
    pub fn ids(&self) -> f64 {
        1.0 - 2.0 * self.rho
    }
}

/// Smooth bump weights `exp(-1/(t(1-t)))` normalized to unit sum.
pub fn bump_weights(n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) / n as f64;
            (-1.0 / (t * (1.0 - t))).exp()
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Weighted Birkhoff averages of one orbit over its full length and its first half.
fn orbit_rotation<C: ProjectiveCocycle + ?Sized>(
    c: &C,
    x0: f64,
    full: &[f64],
    half: &[f64],
) -> Result<(f64, f64)> {
    let (mut acc_full, mut acc_half) = (0.0, 0.0);
    c.orbit(x0, full.len(), &mut |n, inc| {
        acc_full += full[n] * inc;
        if let Some(h) = half.get(n) {
            acc_half += h * inc;
        }
    })?;
    Ok((acc_full / (2.0 * PI), acc_half / (2.0 * PI)))
}

/// Fibered rotation number by weighted Birkhoff averaging of the lifted angle.
///
/// Convention: nonincreasing in energy, `1/2` below the spectrum and `0` above it.
/// The error is the larger of the across-phase spread and the full-versus-half
/// orbit discrepancy, floored at a few ulps.
pub fn rotation_number<C: ProjectiveCocycle + ?Sized>(
    c: &C,
    iterations: usize,
    phases: usize,
) -> Result<RotationEstimate> {
    let n = iterations.max(16);
    let p = phases.max(1);
    let full = bump_weights(n);
    let half = bump_weights(n / 2);
    let runs: Vec<(f64, f64)> = (0..p)
        .into_par_iter()
        .map(|j| orbit_rotation(c, (j as f64 + 0.5) / p as f64, &full, &half))
        .collect::<Result<_>>()?;
    let per_phase: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let rho = per_phase.iter().sum::<f64>() / p as f64;
    let lo = per_phase.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = per_phase.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let drift = runs.iter().map(|r| (r.0 - r.1).abs()).fold(0.0, f64::max);
    Ok(RotationEstimate {
        rho,
        err: (hi - lo).max(drift).max(8.0 * f64::EPSILON),
        per_phase,
    })
}

/// Rotation number of the unimodular cocycle at one energy.
pub fn rotation_at(sampler: &CocycleSampler, iterations: usize, phases: usize) -> Result<RotationEstimate> {
    rotation_number(&RenormalizedCocycle(*sampler), iterations, phases)
}
