//! Scalar level-set fields describing the interface.
//!
//! Sign convention: phi > 0 on the outer subdomain (side 0), phi < 0 on
//! the inner subdomain (side 1), phi = 0 on the interface.

use crate::geom::Point2;

type PhiFn = dyn Fn(f64, f64) -> f64 + Send + Sync;
type GradFn = dyn Fn(f64, f64) -> (f64, f64) + Send + Sync;

pub struct LevelSet {
    phi: Box<PhiFn>,
    grad: Option<Box<GradFn>>,
}

impl LevelSet {
    pub fn new(phi: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        LevelSet {
            phi: Box::new(phi),
            grad: None,
        }
    }

    pub fn with_gradient(
        phi: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        grad: impl Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
    ) -> Self {
        LevelSet {
            phi: Box::new(phi),
            grad: Some(Box::new(grad)),
        }
    }

    pub fn eval(&self, p: &Point2) -> f64 {
        (self.phi)(p.x, p.y)
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.grad.is_some()
    }

    /// Analytic gradient when registered, central differences otherwise.
    pub fn gradient(&self, p: &Point2) -> (f64, f64) {
        match &self.grad {
            Some(g) => g(p.x, p.y),
            None => {
                let s = 1e-6 * (1.0 + p.x.abs().max(p.y.abs()));
                let gx = ((self.phi)(p.x + s, p.y) - (self.phi)(p.x - s, p.y)) / (2.0 * s);
                let gy = ((self.phi)(p.x, p.y + s) - (self.phi)(p.x, p.y - s)) / (2.0 * s);
                (gx, gy)
            }
        }
    }

    /// Unit normal on the interface, pointing from side 1 (phi < 0) into
    /// side 0 (phi > 0).
    pub fn unit_normal(&self, p: &Point2) -> Point2 {
        let (gx, gy) = self.gradient(p);
        let norm = (gx * gx + gy * gy).sqrt();
        Point2::new(gx / norm, gy / norm)
    }
}
