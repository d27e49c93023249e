//! Error measurement in L2 and in the mesh-dependent DG energy norm,
//! plus convergence-order computation.
//!
//! The energy norm splits into five parts, reported separately: the
//! beta-weighted broken H1 seminorm, scaled jump and averaged-gradient
//! terms over interior faces, and the analogous pair over the
//! interface. The total satisfies dg^2 = sum of the squared parts.

use nalgebra::DVector;

use crate::assembly::ExactSolution;
use crate::cut::{CutTopology, FaceClass};
use crate::error::{PrdgError, Result};
use crate::geom::Point2;
use crate::levelset::LevelSet;
use crate::mesh::PolygonalMesh;
use crate::quadrature::{polygon_rule, segment_rule, QuadTarget};
use crate::reconstruction::GlobalSpace;

/// Square roots of the five energy-norm contributions.
#[derive(Debug, Clone, Copy, Default)]
pub struct EnergyBreakdown {
    pub grad: f64,
    pub face_jump: f64,
    pub face_avg_grad: f64,
    pub interface_jump: f64,
    pub interface_avg_grad: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        (self.grad * self.grad
            + self.face_jump * self.face_jump
            + self.face_avg_grad * self.face_avg_grad
            + self.interface_jump * self.interface_jump
            + self.interface_avg_grad * self.interface_avg_grad)
            .sqrt()
    }
}

/// Errors of one run at one mesh size.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub h: f64,
    pub n_dof: usize,
    pub l2_error: f64,
    pub dg_error: f64,
    pub breakdown: EnergyBreakdown,
    /// Observed orders against the previous (coarser) entry.
    pub l2_order: Option<f64>,
    pub dg_order: Option<f64>,
}

/// L2 error of the discrete solution against the exact pieces,
/// integrated side by side over pure cells and cut-cell sub-regions.
pub fn l2_error(
    mesh: &PolygonalMesh,
    topo: &CutTopology,
    space: &GlobalSpace,
    u: &DVector<f64>,
    exact: &ExactSolution,
    quad_order: usize,
) -> f64 {
    let coeffs = space.patch_coefficients(u);
    let mut total = 0.0;
    for cell in 0..mesh.n_cells() {
        for side in 0..2 {
            let Some(region) = topo.cell_region(mesh, cell, side) else {
                continue;
            };
            let rule = polygon_rule(&region, quad_order, QuadTarget::SubRegion);
            for (k, x) in rule.points.iter().enumerate() {
                let e = space.eval_with_coeffs(&coeffs, cell, side, x) - exact.eval(side, x);
                total += rule.weights[k] * e * e;
            }
        }
    }
    total.sqrt()
}

/// DG energy error with its five-term breakdown.
#[allow(clippy::too_many_arguments)]
pub fn dg_energy_error(
    mesh: &PolygonalMesh,
    phi: &LevelSet,
    topo: &CutTopology,
    space: &GlobalSpace,
    u: &DVector<f64>,
    exact: &ExactSolution,
    beta: [f64; 2],
    quad_order: usize,
) -> EnergyBreakdown {
    let coeffs = space.patch_coefficients(u);
    let mut sq = [0.0f64; 5];

    // Beta-weighted broken H1 seminorm.
    for cell in 0..mesh.n_cells() {
        for (side, &b) in beta.iter().enumerate() {
            let Some(region) = topo.cell_region(mesh, cell, side) else {
                continue;
            };
            let rule = polygon_rule(&region, quad_order, QuadTarget::SubRegion);
            for (k, x) in rule.points.iter().enumerate() {
                let (gx, gy) = space.eval_gradient_with_coeffs(&coeffs, cell, side, x);
                let (ux, uy) = exact.eval_grad(side, x);
                let (ex, ey) = (gx - ux, gy - uy);
                sq[0] += rule.weights[k] * b * (ex * ex + ey * ey);
            }
        }
    }

    // Interior face terms per occupied side.
    for face in 0..mesh.faces.len() {
        let f = &mesh.faces[face];
        if f.is_boundary() {
            continue;
        }
        let h_e = f.length;
        let a = mesh.nodes[f.nodes[0]];
        let b = mesh.nodes[f.nodes[1]];
        let n = face_normal(&a, &b);
        let segments: Vec<(Point2, Point2, usize)> = match &topo.face_class[face] {
            FaceClass::Pure0 => vec![(a, b, 0)],
            FaceClass::Pure1 => vec![(a, b, 1)],
            FaceClass::Interface => Vec::new(),
            FaceClass::Cut { root } => {
                let tol = 1e-13 * mesh.h_max();
                [(a, *root), (*root, b)]
                    .into_iter()
                    .filter(|(p, q)| p.dist(q) >= tol)
                    .map(|(p, q)| {
                        let mid = p.lerp(&q, 0.5);
                        let side = if phi.eval(&mid) > 0.0 { 0 } else { 1 };
                        (p, q, side)
                    })
                    .collect()
            }
        };
        let (cl, cr) = (f.cells[0], f.cells[1]);
        for (p, q, side) in segments {
            let rule = segment_rule(&p, &q, quad_order);
            for (k, x) in rule.points.iter().enumerate() {
                let w = rule.weights[k];
                let vl = space.eval_with_coeffs(&coeffs, cl, side, x);
                let vr = space.eval_with_coeffs(&coeffs, cr, side, x);
                // The exact piece is continuous across the face, so the
                // error jump is the discrete jump.
                let jump = vl - vr;
                let gl = space.eval_gradient_with_coeffs(&coeffs, cl, side, x);
                let gr = space.eval_gradient_with_coeffs(&coeffs, cr, side, x);
                let (ux, uy) = exact.eval_grad(side, x);
                let avg_x = 0.5 * (gl.0 + gr.0) - ux;
                let avg_y = 0.5 * (gl.1 + gr.1) - uy;
                let avg_n = avg_x * n.x + avg_y * n.y;
                sq[1] += w * beta[side] / h_e * jump * jump;
                sq[2] += w * beta[side] * h_e * avg_n * avg_n;
            }
        }
    }

    // Interface terms on cut-cell polylines.
    for &cell in &topo.cut_cell_indices() {
        let geom = &topo.cut_cells[&cell];
        let rule = crate::cut::curved_polyline_rule(&geom.polyline, phi, quad_order);
        let h_k = mesh.cell_diameter[cell];
        for (k, x) in rule.points.iter().enumerate() {
            let w = rule.weights[k];
            let n = phi.unit_normal(x);
            accumulate_interface(
                &mut sq, space, &coeffs, exact, beta, cell, cell, x, &n, w, h_k,
            );
        }
    }

    // Degenerate whole-face interface pieces.
    for face in 0..mesh.faces.len() {
        if topo.face_class[face] != FaceClass::Interface {
            continue;
        }
        let f = &mesh.faces[face];
        let (cl, cr) = (f.cells[0], f.cells[1]);
        let (c1, c0) = if topo.cell_on_side(cl, 1) && !topo.cell_on_side(cl, 0) {
            (cl, cr)
        } else {
            (cr, cl)
        };
        let a = mesh.nodes[f.nodes[0]];
        let b = mesh.nodes[f.nodes[1]];
        let mut n = face_normal(&a, &b);
        // Point from side 1 toward side 0.
        let b0 = mesh.cell_barycenter[c0];
        let b1 = mesh.cell_barycenter[c1];
        if n.x * (b0.x - b1.x) + n.y * (b0.y - b1.y) < 0.0 {
            n = Point2::new(-n.x, -n.y);
        }
        let rule = segment_rule(&a, &b, quad_order);
        for (k, x) in rule.points.iter().enumerate() {
            let w = rule.weights[k];
            accumulate_interface(
                &mut sq, space, &coeffs, exact, beta, c0, c1, x, &n, w, f.length,
            );
        }
    }

    EnergyBreakdown {
        grad: sq[0].sqrt(),
        face_jump: sq[1].sqrt(),
        face_avg_grad: sq[2].sqrt(),
        interface_jump: sq[3].sqrt(),
        interface_avg_grad: sq[4].sqrt(),
    }
}

fn face_normal(a: &Point2, b: &Point2) -> Point2 {
    let len = a.dist(b);
    Point2::new((b.y - a.y) / len, -(b.x - a.x) / len)
}

#[allow(clippy::too_many_arguments)]
fn accumulate_interface(
    sq: &mut [f64; 5],
    space: &GlobalSpace,
    coeffs: &[DVector<f64>],
    exact: &ExactSolution,
    beta: [f64; 2],
    cell0: usize,
    cell1: usize,
    x: &Point2,
    n: &Point2,
    w: f64,
    h_pen: f64,
) {
    // The interface terms mirror the weighted Nitsche form: the flux
    // average carries the opposite side's beta and the scaling
    // coefficient is the harmonic mean, so the norm is the one the
    // scheme is coercive in, uniformly in the contrast.
    let sum = beta[0] + beta[1];
    let bh = 2.0 * beta[0] * beta[1] / sum;
    let (w0, w1) = (beta[1] / sum, beta[0] / sum);
    let e0 = space.eval_with_coeffs(coeffs, cell0, 0, x) - exact.eval(0, x);
    let e1 = space.eval_with_coeffs(coeffs, cell1, 1, x) - exact.eval(1, x);
    let jump = e1 - e0;
    let g0 = space.eval_gradient_with_coeffs(coeffs, cell0, 0, x);
    let g1 = space.eval_gradient_with_coeffs(coeffs, cell1, 1, x);
    let (u0x, u0y) = exact.eval_grad(0, x);
    let (u1x, u1y) = exact.eval_grad(1, x);
    let f0 = beta[0] * ((g0.0 - u0x) * n.x + (g0.1 - u0y) * n.y);
    let f1 = beta[1] * ((g1.0 - u1x) * n.x + (g1.1 - u1y) * n.y);
    let avg = w0 * f0 + w1 * f1;
    sq[3] += w * bh / h_pen * jump * jump;
    sq[4] += w * h_pen / bh * avg * avg;
}

/// Observed orders log(e_prev / e) / log(h_prev / h) for a strictly
/// decreasing mesh-size sequence. Entry k corresponds to hs[k] against
/// hs[k-1]; the first entry has no order.
pub fn convergence_orders(hs: &[f64], errors: &[f64]) -> Result<Vec<Option<f64>>> {
    if hs.len() != errors.len() {
        return Err(PrdgError::Argument(
            "mesh sizes and errors must have equal length".into(),
        ));
    }
    for w in hs.windows(2) {
        if w[1] >= w[0] {
            return Err(PrdgError::Argument(format!(
                "mesh sizes must decrease strictly, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    let mut out = vec![None];
    for k in 1..hs.len() {
        if errors[k] <= 0.0 || errors[k - 1] <= 0.0 {
            out.push(None);
        } else {
            out.push(Some(
                (errors[k - 1] / errors[k]).ln() / (hs[k - 1] / hs[k]).ln(),
            ));
        }
    }
    Ok(out)
}

/// Fills the order fields of a refinement sequence in place.
pub fn attach_orders(reports: &mut [ErrorReport]) -> Result<()> {
    let hs: Vec<f64> = reports.iter().map(|r| r.h).collect();
    let l2: Vec<f64> = reports.iter().map(|r| r.l2_error).collect();
    let dg: Vec<f64> = reports.iter().map(|r| r.dg_error).collect();
    let l2o = convergence_orders(&hs, &l2)?;
    let dgo = convergence_orders(&hs, &dg)?;
    for (i, r) in reports.iter_mut().enumerate() {
        r.l2_order = l2o[i];
        r.dg_order = dgo[i];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::ExactSolution;
    use crate::cut::classify;
    use crate::mesh::generate_triangular_mesh;
    use crate::patch::build_patches;

    fn circle_space(
        h: f64,
        m: usize,
    ) -> (PolygonalMesh, LevelSet, CutTopology, GlobalSpace) {
        let mesh = generate_triangular_mesh((-1.0, 1.0), (-1.0, 1.0), h).unwrap();
        let phi =
            LevelSet::with_gradient(|x, y| x * x + y * y - 0.25, |x, y| (2.0 * x, 2.0 * y));
        let topo = classify(&mesh, &phi, 4).unwrap();
        let table = build_patches(&mesh, &topo, m, [5, 9, 15][m - 1]).unwrap();
        let space = GlobalSpace::build(&mesh, &topo, table, m).unwrap();
        (mesh, phi, topo, space)
    }

    fn constant_exact(c: f64) -> ExactSolution {
        ExactSolution {
            u: [Box::new(move |_, _| c), Box::new(move |_, _| c)],
            grad: [Box::new(|_, _| (0.0, 0.0)), Box::new(|_, _| (0.0, 0.0))],
        }
    }

    #[test]
    fn zero_solution_against_constant_one() {
        // ||0 - 1||_L2 over [-1,1]^2 is sqrt(4) = 2.
        let (mesh, _, topo, space) = circle_space(0.25, 1);
        let u = DVector::zeros(space.n_dofs());
        let e = l2_error(&mesh, &topo, &space, &u, &constant_exact(1.0), 4);
        assert!((e - 2.0).abs() < 1e-10, "error {e}");
    }

    #[test]
    fn exact_constant_has_zero_errors() {
        let (mesh, phi, topo, space) = circle_space(0.25, 2);
        let u = DVector::from_element(space.n_dofs(), 4.5);
        let exact = constant_exact(4.5);
        let e = l2_error(&mesh, &topo, &space, &u, &exact, 6);
        assert!(e < 1e-12, "l2 {e}");
        let b = dg_energy_error(&mesh, &phi, &topo, &space, &u, &exact, [1.0, 10.0], 6);
        assert!(b.total() < 1e-11, "dg {}", b.total());
    }

    #[test]
    fn interpolated_linear_has_tiny_errors() {
        let (mesh, phi, topo, space) = circle_space(0.25, 1);
        let g = |x: f64, y: f64| 1.0 - 2.0 * x + 0.5 * y;
        let u = space.interpolate(&mesh, &g, &g);
        let exact = ExactSolution {
            u: [Box::new(g), Box::new(g)],
            grad: [
                Box::new(|_, _| (-2.0, 0.5)),
                Box::new(|_, _| (-2.0, 0.5)),
            ],
        };
        let e = l2_error(&mesh, &topo, &space, &u, &exact, 4);
        assert!(e < 1e-10, "l2 {e}");
        let b = dg_energy_error(&mesh, &phi, &topo, &space, &u, &exact, [1.0, 1.0], 4);
        assert!(b.total() < 1e-9, "dg {}", b.total());
    }

    #[test]
    fn breakdown_total_is_root_sum_of_squares() {
        let (mesh, phi, topo, space) = circle_space(0.25, 1);
        // An arbitrary non-smooth discrete function.
        let u = DVector::from_fn(space.n_dofs(), |i, _| ((i * 31 % 17) as f64) * 0.1);
        let exact = constant_exact(0.0);
        let b = dg_energy_error(&mesh, &phi, &topo, &space, &u, &exact, [1.0, 10.0], 4);
        let total2 = b.grad * b.grad
            + b.face_jump * b.face_jump
            + b.face_avg_grad * b.face_avg_grad
            + b.interface_jump * b.interface_jump
            + b.interface_avg_grad * b.interface_avg_grad;
        assert!((b.total() * b.total() - total2).abs() < 1e-12 * total2.max(1.0));
        assert!(b.face_jump > 0.0 && b.interface_jump > 0.0);
    }

    #[test]
    fn orders_from_known_pairs() {
        let o = convergence_orders(&[0.2, 0.1], &[8e-3, 2e-3]).unwrap();
        assert_eq!(o[0], None);
        assert!((o[1].unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nonmonotone_h_rejected() {
        assert!(convergence_orders(&[0.1, 0.2], &[1.0, 1.0]).is_err());
        assert!(convergence_orders(&[0.1], &[1.0, 2.0]).is_err());
    }
}
