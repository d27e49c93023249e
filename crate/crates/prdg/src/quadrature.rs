//! Quadrature rules: Gauss-Legendre segments, triangles via a collapsed
//! tensor product, and simple polygons via fan triangulation.

use crate::geom::{self, Point2};

/// What a rule integrates over; kept for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadTarget {
    WholeCell,
    SubRegion,
    FaceSegment,
    InterfaceSegment,
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<Point2>,
    pub weights: Vec<f64>,
    pub target: QuadTarget,
}

impl QuadratureRule {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let (mut p, mut dp);
        loop {
            let (pv, dpv) = legendre_with_derivative(n, x);
            p = pv;
            dp = dpv;
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dpv) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dpv * dpv);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
        let _ = (p, dp);
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Points needed for exactness up to polynomial degree `order` in 1D.
pub(crate) fn gl_count(order: usize) -> usize {
    order / 2 + 1
}

/// Gauss-Legendre rule on a straight segment, exact for polynomials (in
/// arclength parameter) up to `order`.
pub fn segment_rule(a: &Point2, b: &Point2, order: usize) -> QuadratureRule {
    let (nodes, weights) = gauss_legendre(gl_count(order));
    let len = a.dist(b);
    let points = nodes
        .iter()
        .map(|&t| a.lerp(b, 0.5 * (t + 1.0)))
        .collect();
    let weights = weights.iter().map(|&w| 0.5 * w * len).collect();
    QuadratureRule {
        points,
        weights,
        target: QuadTarget::FaceSegment,
    }
}

/// Rule over a polyline (one Gauss-Legendre rule per sub-segment).
pub fn polyline_rule(vertices: &[Point2], order: usize) -> QuadratureRule {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for pair in vertices.windows(2) {
        let r = segment_rule(&pair[0], &pair[1], order);
        points.extend(r.points);
        weights.extend(r.weights);
    }
    QuadratureRule {
        points,
        weights,
        target: QuadTarget::InterfaceSegment,
    }
}

/// Rule on a triangle, exact for total degree `order`. Built from a
/// tensor-product Gauss-Legendre rule on the unit square collapsed onto
/// the reference triangle; the (1-u) Jacobian is folded into the
/// integrand, so the u-direction needs one extra degree of exactness.
pub fn triangle_rule(p0: &Point2, p1: &Point2, p2: &Point2, order: usize) -> QuadratureRule {
    let (nu, wu) = gauss_legendre(gl_count(order + 1));
    let (nv, wv) = gauss_legendre(gl_count(order));
    let jac = 2.0 * geom::signed_area(&[*p0, *p1, *p2]).abs();
    let mut points = Vec::with_capacity(nu.len() * nv.len());
    let mut weights = Vec::with_capacity(nu.len() * nv.len());
    for (i, &xu) in nu.iter().enumerate() {
        let u = 0.5 * (xu + 1.0);
        for (j, &xv) in nv.iter().enumerate() {
            let v = 0.5 * (xv + 1.0);
            // Reference coordinates (u, v(1-u)) cover the unit triangle.
            let r = u;
            let s = v * (1.0 - u);
            let x = p0.x + r * (p1.x - p0.x) + s * (p2.x - p0.x);
            let y = p0.y + r * (p1.y - p0.y) + s * (p2.y - p0.y);
            points.push(Point2::new(x, y));
            weights.push(0.25 * wu[i] * wv[j] * (1.0 - u) * jac);
        }
    }
    QuadratureRule {
        points,
        weights,
        target: QuadTarget::WholeCell,
    }
}

/// Rule on a simple polygon via fan triangulation from the centroid when
/// the polygon is star-shaped around it, otherwise by ear clipping.
/// Degenerate (zero-area) polygons yield an empty rule.
pub fn polygon_rule(vertices: &[Point2], order: usize, target: QuadTarget) -> QuadratureRule {
    let area = geom::signed_area(vertices).abs();
    if vertices.len() < 3 || area < 1e-300 {
        return QuadratureRule {
            points: Vec::new(),
            weights: Vec::new(),
            target,
        };
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for tri in triangulate(vertices) {
        let r = triangle_rule(&tri[0], &tri[1], &tri[2], order);
        points.extend(r.points);
        weights.extend(r.weights);
    }
    QuadratureRule {
        points,
        weights,
        target,
    }
}

/// Fan triangulation from the centroid if every fan triangle keeps
/// positive orientation; falls back to ear clipping for non-star shapes.
fn triangulate(vertices: &[Point2]) -> Vec<[Point2; 3]> {
    let n = vertices.len();
    let ccw: Vec<Point2> = if geom::signed_area(vertices) < 0.0 {
        vertices.iter().rev().cloned().collect()
    } else {
        vertices.to_vec()
    };
    let c = geom::centroid(&ccw);
    let mut fan = Vec::with_capacity(n);
    let mut star_shaped = true;
    for i in 0..n {
        let tri = [c, ccw[i], ccw[(i + 1) % n]];
        if geom::signed_area(&tri) <= 0.0 {
            star_shaped = false;
            break;
        }
        fan.push(tri);
    }
    if star_shaped {
        return fan;
    }
    ear_clip(&ccw)
}

fn ear_clip(vertices: &[Point2]) -> Vec<[Point2; 3]> {
    let mut poly: Vec<Point2> = vertices.to_vec();
    let mut tris = Vec::new();
    let mut guard = 0;
    while poly.len() > 3 {
        let n = poly.len();
        let mut clipped = false;
        for i in 0..n {
            let prev = poly[(i + n - 1) % n];
            let cur = poly[i];
            let next = poly[(i + 1) % n];
            if geom::signed_area(&[prev, cur, next]) <= 1e-300 {
                continue;
            }
            let ear = [prev, cur, next];
            let mut contains = false;
            for (j, p) in poly.iter().enumerate() {
                if j == i || j == (i + n - 1) % n || j == (i + 1) % n {
                    continue;
                }
                if geom::point_in_polygon(p, &ear) {
                    contains = true;
                    break;
                }
            }
            if !contains {
                tris.push(ear);
                poly.remove(i);
                clipped = true;
                break;
            }
        }
        guard += 1;
        if !clipped || guard > 10 * vertices.len() {
            // Nearly-degenerate remainder; fan what is left.
            break;
        }
    }
    if poly.len() == 3 {
        tris.push([poly[0], poly[1], poly[2]]);
    }
    tris
}
