//! 2x2 real matrices and a log-log slope fit, the only linear algebra the
//! toolkit needs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Row-major real 2x2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn sub(&self, o: &Mat2) -> Mat2 {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    /// Solves `self * x = rhs` by Cramer's rule; `None` when singular.
    pub fn solve(&self, rhs: [f64; 2]) -> Option<[f64; 2]> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some([
            (rhs[0] * self.d - self.b * rhs[1]) / det,
            (self.a * rhs[1] - self.c * rhs[0]) / det,
        ])
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    /// Eigenvalues ordered by ascending real part, then ascending imaginary part.
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let half_tr = 0.5 * self.trace();
        let disc = half_tr * half_tr - self.det();
        if disc >= 0.0 {
            let s = disc.sqrt();
            // avoid cancellation in the smaller root
            let big = if half_tr >= 0.0 { half_tr + s } else { half_tr - s };
            let small = if big != 0.0 { self.det() / big } else { 0.0 };
            let (lo, hi) = if big < small { (big, small) } else { (small, big) };
            [Complex64::new(lo, 0.0), Complex64::new(hi, 0.0)]
        } else {
            let s = (-disc).sqrt();
            [Complex64::new(half_tr, -s), Complex64::new(half_tr, s)]
        }
    }
}

/// Least-squares slope of `ln y` against `ln x`.
///
/// Pairs with a non-positive or non-finite coordinate are skipped; returns
/// `None` with fewer than two usable points.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// `n` points geometrically spaced from `lo` to `hi` inclusive.
pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `n` points uniformly spaced from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_saddle_and_center() {
        let saddle = Mat2::new(0.0, 4.0, 1.0, 0.0);
        let ev = saddle.eigenvalues();
        assert!((ev[0].re + 2.0).abs() < 1e-15 && (ev[1].re - 2.0).abs() < 1e-15);
        let center = Mat2::new(0.0, -4.0, 1.0, 0.0);
        let ev = center.eigenvalues();
        assert_eq!(ev[0].re, 0.0);
        assert!((ev[1].im - 2.0).abs() < 1e-15);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let xs = geomspace(1e-3, 1e-1, 7);
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powi(5)).collect();
        assert!((log_log_slope(&xs, &ys).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn solve_matches_inverse() {
        let m = Mat2::new(2.0, 1.0, -1.0, 3.0);
        let x = m.solve([1.0, 2.0]).unwrap();
        let back = m.apply(x);
        assert!((back[0] - 1.0).abs() < 1e-15 && (back[1] - 2.0).abs() < 1e-15);
        assert!(Mat2::new(1.0, 2.0, 2.0, 4.0).solve([1.0, 0.0]).is_none());
    }
}
