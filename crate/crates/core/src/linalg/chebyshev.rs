use std::f64::consts::PI;

use super::{axpy, C64, ZERO};

/// Chebyshev expansion of a real function on an interval `[lo, hi]`, used to
/// apply `f(T)` to a vector given only the action of a Hermitian `T` whose
/// spectrum lies in that interval.
#[derive(Clone, Debug)]
pub struct ChebyshevFunction {
    coeffs: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl ChebyshevFunction {
    /// Interpolates `f` at Chebyshev points, doubling the degree until the
    /// trailing coefficients drop below `tol` relative to the largest one.
    pub fn fit(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Self {
        assert!(hi > lo, "empty interval");
        let mut n = 32usize;
        loop {
            let coeffs = Self::coefficients(&f, lo, hi, n);
            let scale = coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
            let tail = coeffs[n - 4..].iter().fold(0.0f64, |a, c| a.max(c.abs()));
            if tail <= tol * scale || n >= 1 << 14 {
                let keep = coeffs
                    .iter()
                    .rposition(|c| c.abs() > 0.1 * tol * scale)
                    .map_or(1, |k| k + 1);
                return Self {
                    coeffs: coeffs[..keep].to_vec(),
                    lo,
                    hi,
                };
            }
            n *= 2;
        }
    }

    fn coefficients(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let theta: Vec<f64> = (0..n).map(|j| PI * (j as f64 + 0.5) / n as f64).collect();
        let fv: Vec<f64> = theta.iter().map(|t| f(mid + half * t.cos())).collect();
        (0..n)
            .map(|k| {
                let s: f64 = theta
                    .iter()
                    .zip(&fv)
                    .map(|(t, v)| v * (k as f64 * t).cos())
                    .sum();
                let c = 2.0 * s / n as f64;
                if k == 0 {
                    0.5 * c
                } else {
                    c
                }
            })
            .collect()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let x = (2.0 * t - self.lo - self.hi) / (self.hi - self.lo);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + self.coeffs[0]
    }

    /// `y <- f(T) x`, where `apply_t(v, w)` sets `w <- T v`.
    pub fn apply(&self, apply_t: impl Fn(&[C64], &mut [C64]), x: &[C64], y: &mut [C64]) {
        let n = x.len();
        let a = 2.0 / (self.hi - self.lo);
        let b = -(self.hi + self.lo) / (self.hi - self.lo);
        let mut scratch = vec![ZERO; n];
        // mapped operator S = a T + b
        let apply_s = |v: &[C64], w: &mut [C64], tmp: &mut [C64]| {
            apply_t(v, tmp);
            for i in 0..n {
                w[i] = tmp[i] * a + v[i] * b;
            }
        };
        let mut t_prev = x.to_vec();
        y.iter_mut()
            .zip(x)
            .for_each(|(yi, xi)| *yi = xi * self.coeffs[0]);
        if self.coeffs.len() == 1 {
            return;
        }
        let mut t_cur = vec![ZERO; n];
        apply_s(x, &mut t_cur, &mut scratch);
        axpy(C64::new(self.coeffs[1], 0.0), &t_cur, y);
        let mut t_next = vec![ZERO; n];
        for &c in &self.coeffs[2..] {
            apply_s(&t_cur, &mut t_next, &mut scratch);
            for i in 0..n {
                t_next[i] = t_next[i] * 2.0 - t_prev[i];
            }
            axpy(C64::new(c, 0.0), &t_next, y);
            std::mem::swap(&mut t_prev, &mut t_cur);
            std::mem::swap(&mut t_cur, &mut t_next);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_fit_is_accurate_on_interval() {
        let f = ChebyshevFunction::fit(f64::sqrt, 1.0, 50.0, 1e-14);
        for i in 0..=200 {
            let t = 1.0 + 49.0 * i as f64 / 200.0;
            assert!((f.eval(t) - t.sqrt()).abs() < 1e-12 * t.sqrt(), "t={t}");
        }
    }

    #[test]
    fn matrix_function_on_diagonal_operator() {
        let d = [1.0, 2.5, 7.0, 20.0];
        let f = ChebyshevFunction::fit(|t| 1.0 / t.sqrt(), 1.0, 20.0, 1e-14);
        let x: Vec<C64> = (0..4).map(|i| C64::new(1.0 + i as f64, -0.5)).collect();
        let mut y = vec![ZERO; 4];
        f.apply(
            |v, w| {
                for i in 0..4 {
                    w[i] = v[i] * d[i];
                }
            },
            &x,
            &mut y,
        );
        for i in 0..4 {
            assert!((y[i] - x[i] / d[i].sqrt()).norm() < 1e-12);
        }
    }
}
