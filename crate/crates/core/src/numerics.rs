// SPDX-License-Identifier: Apache-2.0

//! Small numerical kernels shared by the physics modules: quadrature,
//! monotone interpolation, one-dimensional search and finite differences.

use crate::error::{Error, Result};

/// `n` evenly spaced samples from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|k| if k == n - 1 { hi } else { lo + step * k as f64 })
                .collect()
        }
    }
}

/// Checks that `xs` is uniformly spaced and returns the spacing.
pub fn uniform_step(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(Error::NonUniformGrid);
    }
    let h = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    if !(h > 0.0) {
        return Err(Error::NonUniformGrid);
    }
    for w in xs.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-6 * h {
            return Err(Error::NonUniformGrid);
        }
    }
    Ok(h)
}

/// Composite Simpson rule over uniformly spaced samples.
///
/// An odd number of intervals is handled with a 3/8 panel on the tail, so
/// the rule stays fourth-order for any sample count of at least 3.
pub fn simpson(ys: &[f64], h: f64) -> f64 {
    let n = ys.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (ys[0] + ys[1]),
        3 => h / 3.0 * (ys[0] + 4.0 * ys[1] + ys[2]),
        _ => {
            let intervals = n - 1;
            let (even_end, tail) = if intervals.is_multiple_of(2) {
                (n - 1, 0.0)
            } else {
                let k = n - 4;
                let tail = 3.0 * h / 8.0 * (ys[k] + 3.0 * ys[k + 1] + 3.0 * ys[k + 2] + ys[k + 3]);
                (k, tail)
            };
            if even_end == 0 {
                return tail;
            }
            let mut acc = ys[0] + ys[even_end];
            for (i, y) in ys.iter().enumerate().take(even_end).skip(1) {
                acc += if i % 2 == 1 { 4.0 * y } else { 2.0 * y };
            }
            h / 3.0 * acc + tail
        }
    }
}

/// Simpson quadrature of `f` on `[a, b]` with `intervals` panels (rounded
/// up to an even count).
pub fn simpson_fn(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = intervals.max(2) + intervals % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    h / 3.0 * acc
}

/// Second-order finite-difference derivative of uniformly sampled data.
pub fn gradient(ys: &[f64], h: f64) -> Vec<f64> {
    let n = ys.len();
    if n < 3 {
        return if n == 2 { vec![(ys[1] - ys[0]) / h; 2] } else { vec![0.0; n] };
    }
    let mut out = vec![0.0; n];
    out[0] = (-3.0 * ys[0] + 4.0 * ys[1] - ys[2]) / (2.0 * h);
    out[n - 1] = (3.0 * ys[n - 1] - 4.0 * ys[n - 2] + ys[n - 3]) / (2.0 * h);
    for i in 1..n - 1 {
        out[i] = (ys[i + 1] - ys[i - 1]) / (2.0 * h);
    }
    out
}

/// Piecewise cubic Hermite interpolant with Fritsch–Carlson slopes.
///
/// Monotone data yields a monotone interpolant with no overshoot.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::Invalid("interpolation needs >= 2 matching samples".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("interpolation abscissae must increase".into()));
        }
        let n = xs.len();
        let secants: Vec<f64> = (0..n - 1)
            .map(|k| (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]))
            .collect();
        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes[0] = secants[0];
            slopes[1] = secants[0];
        } else {
            for k in 1..n - 1 {
                let (d0, d1) = (secants[k - 1], secants[k]);
                if d0 * d1 <= 0.0 {
                    slopes[k] = 0.0;
                } else {
                    let h0 = xs[k] - xs[k - 1];
                    let h1 = xs[k + 1] - xs[k];
                    let w0 = 2.0 * h1 + h0;
                    let w1 = h1 + 2.0 * h0;
                    slopes[k] = (w0 + w1) / (w0 / d0 + w1 / d1);
                }
            }
            slopes[0] = end_slope(xs[1] - xs[0], xs[2] - xs[1], secants[0], secants[1]);
            slopes[n - 1] = end_slope(
                xs[n - 1] - xs[n - 2],
                xs[n - 2] - xs[n - 3],
                secants[n - 2],
                secants[n - 3],
            );
        }
        Ok(Self { xs, ys, slopes })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    /// Evaluates the interpolant; `None` outside the sampled domain.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let k = match self.xs.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(k) => return Some(self.ys[k]),
            Err(k) => k - 1,
        };
        let h = self.xs[k + 1] - self.xs[k];
        let s = (x - self.xs[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Some(
            h00 * self.ys[k]
                + h10 * h * self.slopes[k]
                + h01 * self.ys[k + 1]
                + h11 * h * self.slopes[k + 1],
        )
    }
}

// Three-point end slope, limited to keep the shape monotone.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimisation of a unimodal `f` on `[a, b]`, returning the
/// abscissa and value of the best point found.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .unwrap()
}

/// Coarse scan followed by golden-section refinement around the best sample.
/// Suited to multimodal functions on a bounded interval (e.g. a phase angle).
pub fn scan_then_golden(f: impl Fn(f64) -> f64, a: f64, b: f64, samples: usize, tol: f64) -> (f64, f64) {
    let xs = linspace(a, b, samples.max(3));
    let step = xs[1] - xs[0];
    let (k, _) = xs
        .iter()
        .map(|&x| f(x))
        .enumerate()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .unwrap();
    golden_section_min(&f, xs[k] - step, xs[k] + step, tol)
}

/// Bisection for `f(x) = target` with `f` increasing on `[lo, hi]` and a
/// sign change bracketed. Stops when the residual is below `ftol` or the
/// bracket is exhausted in floating point.
pub fn bisect_increasing(
    f: impl Fn(f64) -> f64,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    ftol: f64,
) -> (f64, f64) {
    let mut best = (hi, f(hi) - target);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let r = f(mid) - target;
        if r.abs() < best.1.abs() {
            best = (mid, r);
        }
        if r.abs() <= ftol || mid <= lo || mid >= hi {
            break;
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_for_cubics_with_odd_and_even_intervals() {
        for n in [3usize, 4, 5, 8, 101, 102] {
            let xs = linspace(0.0, 2.0, n);
            let h = xs[1] - xs[0];
            let ys: Vec<f64> = xs.iter().map(|x| x * x * x - 2.0 * x + 1.0).collect();
            let exact = 4.0 - 4.0 + 2.0;
            assert!((simpson(&ys, h) - exact).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn monotone_cubic_preserves_monotonicity_and_reproduces_nodes() {
        let xs = linspace(0.0, 1.0, 11);
        let ys: Vec<f64> = xs.iter().map(|x| if *x < 0.5 { 0.0 } else { 1.0 }).collect();
        let p = MonotoneCubic::new(xs.clone(), ys.clone()).unwrap();
        let fine = linspace(0.0, 1.0, 1001);
        let vals: Vec<f64> = fine.iter().map(|&x| p.eval(x).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-15));
        assert!(vals.iter().all(|v| (-1e-15..=1.0 + 1e-15).contains(v)));
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(p.eval(*x).unwrap(), *y);
        }
        assert!(p.eval(1.0 + 1e-9).is_none());
    }

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (x, fx) = golden_section_min(|x| (x - 0.3).powi(2) + 2.0, -1.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-15);
    }

    #[test]
    fn bisection_hits_target() {
        let (x, r) = bisect_increasing(|x| x.powi(3), 2.0, 0.0, 2.0, 1e-13);
        assert!(r.abs() <= 1e-13);
        assert!((x - 2f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn uniform_step_rejects_irregular_grids() {
        assert!(uniform_step(&linspace(0.001, 20.0, 4001)).is_ok());
        assert!(uniform_step(&[0.0, 1.0, 3.0]).is_err());
    }
}
