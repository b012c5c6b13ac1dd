use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Truncated Fourier series; index `k` stands for `exp(2 pi i k x / period)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    pub k_max: usize,
    /// 1 or 2.
    pub period: u8,
    coeffs: Vec<Complex64>,
}

impl FourierSeries {
    pub fn zeros(k_max: usize, period: u8) -> Self {
        assert!(period == 1 || period == 2);
        FourierSeries {
            k_max,
            period,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * k_max + 1],
        }
    }

    pub fn constant(c: Complex64, period: u8) -> Self {
        let mut f = FourierSeries::zeros(0, period);
        f.coeffs[0] = c;
        f
    }

    /// Coefficients listed from `-k_max` to `k_max`.
    pub fn from_coeffs(coeffs: Vec<Complex64>, period: u8) -> Self {
        assert!(coeffs.len() % 2 == 1 && (period == 1 || period == 2));
        FourierSeries {
            k_max: coeffs.len() / 2,
            period,
            coeffs,
        }
    }

    /// Samples at `x_j = period * j / M`, transformed and cut at `k_max < M / 2`.
    pub fn from_samples(samples: &[Complex64], period: u8, k_max: usize) -> Self {
        let m = samples.len();
        assert!(2 * k_max < m, "too few samples for the requested order");
        let mut buf = samples.to_vec();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        let mut f = FourierSeries::zeros(k_max, period);
        for k in -(k_max as i64)..=k_max as i64 {
            let j = k.rem_euclid(m as i64) as usize;
            f.coeffs[(k + k_max as i64) as usize] = buf[j] / m as f64;
        }
        f
    }

    pub fn from_fn(f: impl Fn(f64) -> Complex64, period: u8, k_max: usize, samples: usize) -> Self {
        let p = period as f64;
        let s: Vec<Complex64> = (0..samples).map(|j| f(p * j as f64 / samples as f64)).collect();
        FourierSeries::from_samples(&s, period, k_max)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.k_max {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[(k + self.k_max as i64) as usize]
    }

    pub fn set(&mut self, k: i64, v: Complex64) {
        assert!(k.unsigned_abs() as usize <= self.k_max);
        self.coeffs[(k + self.k_max as i64) as usize] = v;
    }

    pub fn mean(&self) -> Complex64 {
        self.coeff(0)
    }

    fn freq(&self) -> f64 {
        2.0 * PI / self.period as f64
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let w = self.freq() * x;
        let step = Complex64::from_polar(1.0, w);
        let mut up = Complex64::from_polar(1.0, -w * self.k_max as f64);
        let mut s = Complex64::new(0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            if i % 64 == 0 {
                up = Complex64::from_polar(1.0, w * (i as f64 - self.k_max as f64));
            }
            s += c * up;
            up *= step;
        }
        s
    }

    /// Values on `M` equispaced points of one period.
    pub fn samples(&self, m: usize) -> Vec<Complex64> {
        assert!(2 * self.k_max < m);
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for k in -(self.k_max as i64)..=self.k_max as i64 {
            buf[k.rem_euclid(m as i64) as usize] = self.coeff(k);
        }
        FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
        buf
    }

    /// Drops every coefficient with `|k| > k`.
    pub fn truncate(&self, k: usize) -> FourierSeries {
        assert!(k <= self.k_max, "truncation order above the stored order");
        let lo = self.k_max - k;
        FourierSeries {
            k_max: k,
            period: self.period,
            coeffs: self.coeffs[lo..lo + 2 * k + 1].to_vec(),
        }
    }

    /// `sum_{|k| > k} |f_k|`, a bound on the sup-norm of what [`truncate`](Self::truncate) drops.
    pub fn tail_bound(&self, k: usize) -> f64 {
        (-(self.k_max as i64)..=self.k_max as i64)
            .filter(|j| j.unsigned_abs() as usize > k)
            .map(|j| self.coeff(j).norm())
            .sum()
    }

    /// Largest `|f_k - conj(f_{-k})|`; zero for real-valued series.
    pub fn reality_defect(&self) -> f64 {
        (0..=self.k_max as i64)
            .map(|k| (self.coeff(k) - self.coeff(-k).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// `x -> f(x + s)`.
    pub fn shifted(&self, s: f64) -> FourierSeries {
        let mut g = self.clone();
        for k in -(self.k_max as i64)..=self.k_max as i64 {
            let i = (k + self.k_max as i64) as usize;
            g.coeffs[i] *= Complex64::from_polar(1.0, self.freq() * k as f64 * s);
        }
        g
    }

    /// The same function with period-2 indexing.
    pub fn to_period_two(&self) -> FourierSeries {
        if self.period == 2 {
            return self.clone();
        }
        let mut g = FourierSeries::zeros(2 * self.k_max, 2);
        for k in -(self.k_max as i64)..=self.k_max as i64 {
            g.set(2 * k, self.coeff(k));
        }
        g
    }

    /// Multiplies a period-2 series by `exp(pi i n x)`.
    pub fn times_half_phase(&self, n: i64) -> FourierSeries {
        let f = self.to_period_two();
        let k = f.k_max + n.unsigned_abs() as usize;
        let mut g = FourierSeries::zeros(k, 2);
        for j in -(f.k_max as i64)..=f.k_max as i64 {
            g.set(j + n, f.coeff(j));
        }
        g
    }

    pub fn scale(&self, s: Complex64) -> FourierSeries {
        FourierSeries {
            k_max: self.k_max,
            period: self.period,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &FourierSeries) -> FourierSeries {
        assert_eq!(self.period, other.period);
        let k = self.k_max.max(other.k_max);
        let mut g = FourierSeries::zeros(k, self.period);
        for j in -(k as i64)..=k as i64 {
            g.set(j, self.coeff(j) + other.coeff(j));
        }
        g
    }

    /// Sup of `|f|` over `m` equispaced points.
    pub fn grid_sup(&self, m: usize) -> f64 {
        let m = m.max(2 * self.k_max + 1);
        self.samples(m).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Truncation `Gamma_K`.
pub fn fourier_truncate(f: &FourierSeries, k: usize) -> FourierSeries {
    f.truncate(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_series(rng: &mut ChaCha8Rng, k: usize, period: u8) -> FourierSeries {
        let c = (0..2 * k + 1)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        FourierSeries::from_coeffs(c, period)
    }

    #[test]
    fn truncation_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_series(&mut rng, 8, 1);
        assert_eq!(fourier_truncate(&f, 8), f);
        let t = fourier_truncate(&f, 3);
        assert_eq!(fourier_truncate(&t, 3), t);
        let g = random_series(&mut rng, 8, 1);
        let sum = fourier_truncate(&f.add(&g.scale(Complex64::new(2.0, -1.0))), 3);
        let parts = fourier_truncate(&f, 3).add(&fourier_truncate(&g, 3).scale(Complex64::new(2.0, -1.0)));
        for k in -3..=3 {
            assert!((sum.coeff(k) - parts.coeff(k)).norm() < 1e-14);
        }
        let mut h = FourierSeries::zeros(8, 1);
        h.set(5, Complex64::new(1.0, 0.0));
        assert!(fourier_truncate(&h, 3).coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn tail_bound_dominates_the_dropped_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_series(&mut rng, 12, 1);
        let t = f.truncate(4);
        for j in 0..200 {
            let x = j as f64 / 200.0;
            assert!((f.eval(x) - t.eval(x)).norm() <= f.tail_bound(4) + 1e-12);
        }
    }

    #[test]
    fn samples_eval_and_transform_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for period in [1u8, 2] {
            let f = random_series(&mut rng, 10, period);
            let s = f.samples(64);
            for (j, v) in s.iter().enumerate() {
                let x = period as f64 * j as f64 / 64.0;
                assert!((f.eval(x) - v).norm() < 1e-12);
            }
            let back = FourierSeries::from_samples(&s, period, 10);
            for k in -10..=10 {
                assert!((back.coeff(k) - f.coeff(k)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn shifts_and_half_phases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_series(&mut rng, 6, 1);
        let g = f.shifted(0.37);
        let h = f.times_half_phase(3);
        for j in 0..50 {
            let x = j as f64 / 37.0;
            assert!((g.eval(x) - f.eval(x + 0.37)).norm() < 1e-12);
            let want = Complex64::from_polar(1.0, PI * 3.0 * x) * f.eval(x);
            assert!((h.eval(x) - want).norm() < 1e-12);
        }
        assert!(h.eval(1.0).re.is_finite() && (h.eval(1.3) + h.eval(0.3)).norm() < 1e-12);
    }

    #[test]
    fn real_functions_have_hermitian_coefficients() {
        let f = FourierSeries::from_fn(|x| Complex64::new((2.0 * PI * x).cos().exp(), 0.0), 1, 20, 64);
        assert!(f.reality_defect() < 1e-15);
        assert!((f.mean().re - 1.2660658777520082).abs() < 1e-13);
    }
}
