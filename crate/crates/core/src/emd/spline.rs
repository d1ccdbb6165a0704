//! Natural cubic spline used for sifting envelopes.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

/// Values a spline can pass through: real or complex samples.
pub trait SplineValue: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn norm_sqr(self) -> f64;
}

impl SplineValue for f64 {
    fn norm_sqr(self) -> f64 {
        self * self
    }
}

impl SplineValue for Complex64 {
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
}

/// Natural cubic spline through knots with strictly increasing abscissae.
#[derive(Debug, Clone)]
pub struct NaturalSpline<T> {
    x: Vec<f64>,
    y: Vec<T>,
    second: Vec<T>,
}

impl<T: SplineValue> NaturalSpline<T> {
    /// Needs at least two knots. With exactly two the spline is a line.
    pub fn new(x: Vec<f64>, y: Vec<T>) -> Self {
        assert_eq!(x.len(), y.len(), "knot abscissae and values differ in length");
        assert!(x.len() >= 2, "a spline needs at least two knots");
        debug_assert!(x.windows(2).all(|w| w[1] > w[0]), "knots must be strictly increasing");
        let n = x.len();
        let mut second = vec![T::default(); n];
        if n > 2 {
            // Thomas algorithm on the interior equations; natural ends fix M_0 = M_{n-1} = 0.
            let m = n - 2;
            let mut c_prime = vec![0.0; m];
            let mut d_prime = vec![T::default(); m];
            for i in 0..m {
                let k = i + 1;
                let h0 = x[k] - x[k - 1];
                let h1 = x[k + 1] - x[k];
                let rhs = ((y[k + 1] - y[k]) * (1.0 / h1) - (y[k] - y[k - 1]) * (1.0 / h0)) * 6.0;
                let diag = 2.0 * (h0 + h1);
                if i == 0 {
                    c_prime[i] = h1 / diag;
                    d_prime[i] = rhs * (1.0 / diag);
                } else {
                    let denom = diag - h0 * c_prime[i - 1];
                    c_prime[i] = h1 / denom;
                    d_prime[i] = (rhs - d_prime[i - 1] * h0) * (1.0 / denom);
                }
            }
            second[m] = d_prime[m - 1];
            for i in (0..m - 1).rev() {
                second[i + 1] = d_prime[i] - second[i + 2] * c_prime[i];
            }
        }
        Self { x, y, second }
    }

    fn eval_segment(&self, i: usize, t: f64) -> T {
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let (a, b) = (x1 - t, t - x0);
        self.second[i] * (a * a * a / (6.0 * h))
            + self.second[i + 1] * (b * b * b / (6.0 * h))
            + (self.y[i] * (1.0 / h) - self.second[i] * (h / 6.0)) * a
            + (self.y[i + 1] * (1.0 / h) - self.second[i + 1] * (h / 6.0)) * b
    }

    pub fn eval(&self, t: f64) -> T {
        let last = self.x.len() - 2;
        let i = match self.x.partition_point(|&k| k <= t) {
            0 => 0,
            p => (p - 1).min(last),
        };
        self.eval_segment(i, t)
    }

    /// Evaluates at `0, 1, ..., len - 1`; outside the knot range the end cubic is extended.
    pub fn eval_grid(&self, len: usize) -> Vec<T> {
        let last = self.x.len() - 2;
        let mut seg = 0;
        (0..len)
            .map(|n| {
                let t = n as f64;
                while seg < last && self.x[seg + 1] <= t {
                    seg += 1;
                }
                self.eval_segment(seg, t)
            })
            .collect()
    }
}

/// Spline through `values[positions]`, with the two extrema nearest each end
/// mirrored across that end, sampled on `0..len`.
///
/// `positions` must be strictly increasing interior indices and contain at least two entries.
pub fn mirrored_envelope<T: SplineValue>(positions: &[usize], values: &[T], len: usize) -> Vec<T> {
    debug_assert!(positions.len() >= 2);
    let end = (len - 1) as f64;
    let mut x = Vec::with_capacity(positions.len() + 4);
    let mut y = Vec::with_capacity(positions.len() + 4);
    let first = positions[0] as f64;
    for &p in positions.iter().take(2).rev() {
        let m = -(p as f64);
        if m < first {
            x.push(m);
            y.push(values[p]);
        }
    }
    for &p in positions {
        x.push(p as f64);
        y.push(values[p]);
    }
    let last = *positions.last().unwrap() as f64;
    for &p in positions.iter().rev().take(2) {
        let m = 2.0 * end - p as f64;
        if m > last {
            x.push(m);
            y.push(values[p]);
        }
    }
    // Mirrors of points sitting exactly on an end coincide with the original.
    let mut kx = Vec::with_capacity(x.len());
    let mut ky = Vec::with_capacity(y.len());
    for (xi, yi) in x.into_iter().zip(y) {
        if kx.last().is_none_or(|&prev| xi > prev) {
            kx.push(xi);
            ky.push(yi);
        }
    }
    NaturalSpline::new(kx, ky).eval_grid(len)
}
