//! Monomial bases of total degree m in a scaled local frame.
//!
//! Monomials are ordered graded-lexicographically:
//! 1, x, y, x^2, xy, y^2, ...

use crate::geom::Point2;

/// dim P_m = (m+1)(m+2)/2 in two dimensions.
pub fn dim_pm(m: usize) -> usize {
    (m + 1) * (m + 2) / 2
}

/// Exponent pairs (a, b) with a + b <= m, graded lexicographic.
pub fn exponents(m: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(dim_pm(m));
    for total in 0..=m {
        for b in 0..=total {
            out.push((total - b, b));
        }
    }
    out
}

/// A local frame mapping global coordinates to O(1) coordinates.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub center: Point2,
    pub scale: f64,
}

impl Frame {
    pub fn local(&self, p: &Point2) -> (f64, f64) {
        (
            (p.x - self.center.x) / self.scale,
            (p.y - self.center.y) / self.scale,
        )
    }
}

/// Row of monomial values at a point, in the local frame.
pub fn monomial_row(m: usize, frame: &Frame, p: &Point2) -> Vec<f64> {
    let (x, y) = frame.local(p);
    let mut out = Vec::with_capacity(dim_pm(m));
    for (a, b) in exponents(m) {
        out.push(x.powi(a as i32) * y.powi(b as i32));
    }
    out
}

/// Gradient rows (d/dx, d/dy in global coordinates) of all monomials at a
/// point; the chain rule brings in 1/scale.
pub fn monomial_gradient_rows(m: usize, frame: &Frame, p: &Point2) -> Vec<(f64, f64)> {
    let (x, y) = frame.local(p);
    let inv_s = 1.0 / frame.scale;
    let mut out = Vec::with_capacity(dim_pm(m));
    for (a, b) in exponents(m) {
        let dx = if a == 0 {
            0.0
        } else {
            a as f64 * x.powi(a as i32 - 1) * y.powi(b as i32) * inv_s
        };
        let dy = if b == 0 {
            0.0
        } else {
            b as f64 * x.powi(a as i32) * y.powi(b as i32 - 1) * inv_s
        };
        out.push((dx, dy));
    }
    out
}
