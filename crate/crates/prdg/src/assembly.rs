//! Assembly of the interior-penalty bilinear form and load vector.
//!
//! The form has four ingredients: broken volume terms over pure cells
//! and cut-cell sub-regions, interior-penalty face terms per subdomain
//! side, Nitsche terms weakly imposing Dirichlet data on the outer
//! boundary, and Nitsche terms imposing the jump conditions on the
//! interface polyline inside each cut cell.
//!
//! Sign conventions: the interface jump is [w] = w|side1 - w|side0 and
//! the interface normal points from side 1 (phi < 0) into side 0
//! (phi > 0); with the jump data a = u1 - u0 and
//! b = (beta1 grad u1 - beta0 grad u0) . n these combine into the
//! symmetric Nitsche terms below. On interior faces the jump is taken
//! from the first adjacent cell to the second with the normal oriented
//! the same way.

use nalgebra::{DMatrix, DVector};

use crate::cut::{CutTopology, FaceClass};
use crate::error::Result;
use crate::geom::Point2;
use crate::levelset::LevelSet;
use crate::mesh::PolygonalMesh;
use crate::quadrature::{polygon_rule, segment_rule, QuadTarget};
use crate::reconstruction::GlobalSpace;

pub type ScalarFn = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type GradFn = Box<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>;

/// Coefficients and data of one interface problem. Index 0 is the outer
/// subdomain (phi > 0), index 1 the inner one.
pub struct ProblemData {
    pub beta: [f64; 2],
    pub f: [ScalarFn; 2],
    /// Dirichlet data on the outer boundary, per side.
    pub g: [ScalarFn; 2],
    /// Jump of the solution across the interface: a = u1 - u0.
    pub jump_a: ScalarFn,
    /// Jump of the normal flux: b = (beta1 grad u1 - beta0 grad u0) . n.
    pub jump_b: ScalarFn,
}

/// A known exact solution, used for error measurement and consistency
/// checks.
pub struct ExactSolution {
    pub u: [ScalarFn; 2],
    pub grad: [GradFn; 2],
}

impl ExactSolution {
    pub fn eval(&self, side: usize, x: &Point2) -> f64 {
        (self.u[side])(x.x, x.y)
    }

    pub fn eval_grad(&self, side: usize, x: &Point2) -> (f64, f64) {
        (self.grad[side])(x.x, x.y)
    }
}

/// Interior-penalty parameters. Face and boundary terms act within a
/// single subdomain side, so their penalty only needs to dominate that
/// side's coefficient; scaling it with the local beta keeps the error
/// constant independent of the contrast. Interface terms couple both
/// sides; weighting the flux average by the opposite side's beta (so the
/// combined coefficient is the harmonic mean) keeps them robust under
/// large contrast too, where a plain average with a max(beta) penalty
/// pollutes the low-coefficient side on coarse meshes.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct PenaltyConfig {
    /// Penalty on face and boundary segments, per subdomain side.
    pub eta: [f64; 2],
    /// Penalty on interface segments.
    pub eta_interface: f64,
    /// Weights of the side-0 and side-1 fluxes in the interface average;
    /// they must sum to one. The solution average in the flux-jump data
    /// term uses the swapped pair, which keeps the form consistent.
    pub interface_weights: [f64; 2],
}

impl PenaltyConfig {
    /// Default penalty: a per-order constant times the local (side)
    /// beta on faces and times the harmonic mean of beta on the
    /// interface, with contrast-weighted flux averages. The constants
    /// were calibrated on the benchmark suite: large enough for the
    /// Cholesky factorization to go through (coercivity), small enough
    /// not to inflate the penalty part of the error on coarse meshes.
    pub fn default_for(m: usize, beta: [f64; 2]) -> Self {
        let base = match m {
            1 => 8.0,
            2 => 4.0,
            _ => 36.0,
        };
        let sum = beta[0] + beta[1];
        PenaltyConfig {
            eta: [base * beta[0], base * beta[1]],
            eta_interface: base * 2.0 * beta[0] * beta[1] / sum,
            interface_weights: [beta[1] / sum, beta[0] / sum],
        }
    }

    /// One value everywhere with plain arithmetic averages, as written
    /// in the bilinear form.
    pub fn uniform(eta: f64) -> Self {
        PenaltyConfig {
            eta: [eta, eta],
            eta_interface: eta,
            interface_weights: [0.5, 0.5],
        }
    }
}

/// Assembled linear system in triplet form plus the load vector.
pub struct DGSystem {
    pub n: usize,
    pub triplets: Vec<(usize, usize, f64)>,
    pub rhs: DVector<f64>,
}

impl DGSystem {
    fn new(n: usize) -> Self {
        DGSystem {
            n,
            triplets: Vec::new(),
            rhs: DVector::zeros(n),
        }
    }

    /// Scatters a dense local block. Entries mirrored across the
    /// diagonal are pushed from the same local values, so the global
    /// matrix is symmetric to the last bit whenever the block is.
    fn add_block(&mut self, dofs: &[usize], block: &DMatrix<f64>) {
        for (i, &gi) in dofs.iter().enumerate() {
            for (j, &gj) in dofs.iter().enumerate() {
                let v = block[(i, j)];
                if v != 0.0 {
                    self.triplets.push((gi, gj, v));
                }
            }
        }
    }

    /// Dense copy, for small problems and tests.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(i, j, v) in &self.triplets {
            a[(i, j)] += v;
        }
        a
    }

    /// Writes the matrix in whitespace-separated triplet text:
    /// a header line `n n nnz` followed by 0-based `row col value`
    /// lines with duplicate entries pre-summed.
    pub fn write_triplets<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        let mut sorted = self.triplets.clone();
        sorted.sort_by_key(|t| (t.0, t.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, v) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        writeln!(w, "{} {} {}", self.n, self.n, merged.len())?;
        for (i, j, v) in merged {
            writeln!(w, "{i} {j} {v:.17e}")?;
        }
        Ok(())
    }
}

/// Unit normal of a face oriented from `from_cell` outward.
fn face_normal_from(mesh: &PolygonalMesh, face: usize, from_cell: usize) -> Point2 {
    let f = &mesh.faces[face];
    let a = mesh.nodes[f.nodes[0]];
    let b = mesh.nodes[f.nodes[1]];
    let len = a.dist(&b);
    let mut n = Point2::new((b.y - a.y) / len, -(b.x - a.x) / len);
    let mid = Point2::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
    let bary = mesh.cell_barycenter[from_cell];
    if n.x * (mid.x - bary.x) + n.y * (mid.y - bary.y) < 0.0 {
        n = Point2::new(-n.x, -n.y);
    }
    n
}

/// Sub-segments of a face together with the subdomain side each one
/// occupies. A pure face is one segment; a cut face splits at the root.
fn face_segments(
    mesh: &PolygonalMesh,
    phi: &LevelSet,
    face: usize,
    class: &FaceClass,
) -> Vec<(Point2, Point2, usize)> {
    let f = &mesh.faces[face];
    let a = mesh.nodes[f.nodes[0]];
    let b = mesh.nodes[f.nodes[1]];
    match class {
        FaceClass::Pure0 => vec![(a, b, 0)],
        FaceClass::Pure1 => vec![(a, b, 1)],
        FaceClass::Interface => Vec::new(),
        FaceClass::Cut { root } => {
            let tol = 1e-13 * mesh.h_max();
            let mut out = Vec::new();
            for (p, q) in [(a, *root), (*root, b)] {
                if p.dist(&q) < tol {
                    continue;
                }
                let mid = p.lerp(&q, 0.5);
                let side = if phi.eval(&mid) > 0.0 { 0 } else { 1 };
                out.push((p, q, side));
            }
            out
        }
    }
}

/// Union of the DOF lists active on a set of (cell, side) pairs, with
/// per-pair scatter maps from local basis index to combined index.
fn combined_dofs(
    space: &GlobalSpace,
    pairs: &[(usize, usize)],
) -> Result<(Vec<usize>, Vec<Vec<usize>>)> {
    let mut dofs: Vec<usize> = Vec::new();
    let mut maps = Vec::with_capacity(pairs.len());
    for &(cell, side) in pairs {
        let active = space.active(cell, side)?;
        let map = active
            .dofs()
            .iter()
            .map(|&d| match dofs.iter().position(|&e| e == d) {
                Some(k) => k,
                None => {
                    dofs.push(d);
                    dofs.len() - 1
                }
            })
            .collect();
        maps.push(map);
    }
    Ok((dofs, maps))
}

/// Assembles the full system: stiffness triplets and load vector.
pub fn assemble(
    mesh: &PolygonalMesh,
    phi: &LevelSet,
    topo: &CutTopology,
    space: &GlobalSpace,
    problem: &ProblemData,
    penalty: PenaltyConfig,
    quad_order: usize,
) -> Result<DGSystem> {
    let mut sys = DGSystem::new(space.n_dofs());

    // Volume terms: beta grad u . grad v over every occupied region,
    // and the source term on the right-hand side.
    for cell in 0..mesh.n_cells() {
        for side in 0..2 {
            let Some(region) = topo.cell_region(mesh, cell, side) else {
                continue;
            };
            let rule = polygon_rule(&region, quad_order, QuadTarget::SubRegion);
            if rule.is_empty() {
                continue;
            }
            let active = space.active(cell, side)?;
            let dofs = active.dofs();
            let n_loc = dofs.len();
            let beta = problem.beta[side];
            let mut block = DMatrix::zeros(n_loc, n_loc);
            for (q, x) in rule.points.iter().enumerate() {
                let w = rule.weights[q];
                let grads = active.gradients(x);
                let vals = active.values(x);
                for i in 0..n_loc {
                    for j in 0..n_loc {
                        block[(i, j)] += w
                            * beta
                            * (grads[i].0 * grads[j].0 + grads[i].1 * grads[j].1);
                    }
                }
                let fv = w * (problem.f[side])(x.x, x.y);
                for i in 0..n_loc {
                    sys.rhs[dofs[i]] += fv * vals[i];
                }
            }
            sys.add_block(dofs, &block);
        }
    }

    // Face terms.
    for face in 0..mesh.faces.len() {
        let f = &mesh.faces[face];
        let segments = face_segments(mesh, phi, face, &topo.face_class[face]);
        let h_e = f.length;

        if f.is_boundary() {
            // Nitsche terms for the Dirichlet boundary.
            let cell = f.cells[0];
            let n = face_normal_from(mesh, face, cell);
            for (p, q, side) in segments {
                let rule = segment_rule(&p, &q, quad_order);
                let active = space.active(cell, side)?;
                let dofs = active.dofs();
                let n_loc = dofs.len();
                let beta = problem.beta[side];
                let eta = penalty.eta[side];
                let mut block = DMatrix::zeros(n_loc, n_loc);
                for (k, x) in rule.points.iter().enumerate() {
                    let w = rule.weights[k];
                    let vals = active.values(x);
                    let grads = active.gradients(x);
                    let flux: Vec<f64> = grads
                        .iter()
                        .map(|g| beta * (g.0 * n.x + g.1 * n.y))
                        .collect();
                    let g_val = (problem.g[side])(x.x, x.y);
                    for i in 0..n_loc {
                        for j in 0..n_loc {
                            // Grouped so mirrored entries round identically.
                            block[(i, j)] += w
                                * (-(flux[i] * vals[j] + flux[j] * vals[i])
                                    + eta / h_e * (vals[i] * vals[j]));
                        }
                        sys.rhs[dofs[i]] +=
                            w * g_val * (eta / h_e * vals[i] - flux[i]);
                    }
                }
                sys.add_block(dofs, &block);
            }
            continue;
        }

        // Interior face: one interior-penalty term per occupied side.
        let (cl, cr) = (f.cells[0], f.cells[1]);
        let n = face_normal_from(mesh, face, cl);
        for (p, q, side) in segments {
            let rule = segment_rule(&p, &q, quad_order);
            let (dofs, maps) = combined_dofs(space, &[(cl, side), (cr, side)])?;
            let n_loc = dofs.len();
            let beta = problem.beta[side];
            let eta = penalty.eta[side];
            let left = space.active(cl, side)?;
            let right = space.active(cr, side)?;
            let mut block = DMatrix::zeros(n_loc, n_loc);
            for (k, x) in rule.points.iter().enumerate() {
                let w = rule.weights[k];
                // Jump and averaged normal flux over the combined DOFs.
                let mut jump = vec![0.0; n_loc];
                let mut flux = vec![0.0; n_loc];
                let vl = left.values(x);
                let gl = left.gradients(x);
                for (i, &loc) in maps[0].iter().enumerate() {
                    jump[loc] += vl[i];
                    flux[loc] += 0.5 * beta * (gl[i].0 * n.x + gl[i].1 * n.y);
                }
                let vr = right.values(x);
                let gr = right.gradients(x);
                for (i, &loc) in maps[1].iter().enumerate() {
                    jump[loc] -= vr[i];
                    flux[loc] += 0.5 * beta * (gr[i].0 * n.x + gr[i].1 * n.y);
                }
                for i in 0..n_loc {
                    for j in 0..n_loc {
                        block[(i, j)] += w
                            * (-(flux[i] * jump[j] + jump[i] * flux[j])
                                + eta / h_e * (jump[i] * jump[j]));
                    }
                }
            }
            sys.add_block(&dofs, &block);
        }
    }

    // Interface terms on the polyline of each cut cell.
    for &cell in &topo.cut_cell_indices() {
        let geom = &topo.cut_cells[&cell];
        let rule = crate::cut::curved_polyline_rule(&geom.polyline, phi, quad_order);
        let h_k = mesh.cell_diameter[cell];
        interface_block(
            &mut sys,
            space,
            problem,
            &penalty,
            h_k,
            &rule,
            &|x| phi.unit_normal(x),
            cell,
            cell,
        )?;
    }

    // Degenerate faces lying on the interface itself get the same
    // Nitsche terms, with the face normal standing in for the level-set
    // normal.
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
        let n = face_normal_from(mesh, face, c1);
        let a = mesh.nodes[f.nodes[0]];
        let b = mesh.nodes[f.nodes[1]];
        let rule = segment_rule(&a, &b, quad_order);
        interface_block(
            &mut sys,
            space,
            problem,
            &penalty,
            f.length,
            &rule,
            &move |_| n,
            c0,
            c1,
        )?;
    }

    Ok(sys)
}

/// Scatters the interface Nitsche terms over one quadrature rule, with
/// the side-0 and side-1 traces taken from `cell0` and `cell1` (the same
/// cell for a cut-cell polyline). The normal must point from side 1 to
/// side 0.
#[allow(clippy::too_many_arguments)]
fn interface_block(
    sys: &mut DGSystem,
    space: &GlobalSpace,
    problem: &ProblemData,
    penalty: &PenaltyConfig,
    h_pen: f64,
    rule: &crate::quadrature::QuadratureRule,
    normal: &dyn Fn(&Point2) -> Point2,
    cell0: usize,
    cell1: usize,
) -> Result<()> {
    if rule.is_empty() {
        return Ok(());
    }
    let (dofs, maps) = combined_dofs(space, &[(cell0, 0), (cell1, 1)])?;
    let n_loc = dofs.len();
    let side0 = space.active(cell0, 0)?;
    let side1 = space.active(cell1, 1)?;
    let eta = penalty.eta_interface;
    let [w0, w1] = penalty.interface_weights;
    let mut block = DMatrix::zeros(n_loc, n_loc);
    for (k, x) in rule.points.iter().enumerate() {
        let w = rule.weights[k];
        let n = normal(x);
        // [w] = w1 - w0, {beta grad w} . n weighted over sides; the
        // solution average carries the swapped weights.
        let mut jump = vec![0.0; n_loc];
        let mut flux = vec![0.0; n_loc];
        let mut avg = vec![0.0; n_loc];
        let v0 = side0.values(x);
        let g0 = side0.gradients(x);
        for (i, &loc) in maps[0].iter().enumerate() {
            jump[loc] -= v0[i];
            avg[loc] += w1 * v0[i];
            flux[loc] += w0 * problem.beta[0] * (g0[i].0 * n.x + g0[i].1 * n.y);
        }
        let v1 = side1.values(x);
        let g1 = side1.gradients(x);
        for (i, &loc) in maps[1].iter().enumerate() {
            jump[loc] += v1[i];
            avg[loc] += w0 * v1[i];
            flux[loc] += w1 * problem.beta[1] * (g1[i].0 * n.x + g1[i].1 * n.y);
        }
        for i in 0..n_loc {
            for j in 0..n_loc {
                block[(i, j)] += w
                    * (-(flux[i] * jump[j] + jump[i] * flux[j])
                        + eta / h_pen * (jump[i] * jump[j]));
            }
        }
        let a = (problem.jump_a)(x.x, x.y);
        let b = (problem.jump_b)(x.x, x.y);
        for i in 0..n_loc {
            sys.rhs[dofs[i]] +=
                w * (b * avg[i] - a * flux[i] + eta / h_pen * a * jump[i]);
        }
    }
    sys.add_block(&dofs, &block);
    Ok(())
}

/// The vector with entries b_h(u, lambda_j) for an exact solution u,
/// evaluated by quadrature with the same decomposition as `assemble`.
/// Subtracting the assembled load vector gives the Galerkin
/// orthogonality residual.
#[allow(clippy::too_many_arguments)]
pub fn apply_exact(
    mesh: &PolygonalMesh,
    phi: &LevelSet,
    topo: &CutTopology,
    space: &GlobalSpace,
    problem: &ProblemData,
    exact: &ExactSolution,
    penalty: PenaltyConfig,
    quad_order: usize,
) -> Result<DVector<f64>> {
    let mut out = DVector::zeros(space.n_dofs());

    for cell in 0..mesh.n_cells() {
        for side in 0..2 {
            let Some(region) = topo.cell_region(mesh, cell, side) else {
                continue;
            };
            let rule = polygon_rule(&region, quad_order, QuadTarget::SubRegion);
            let active = space.active(cell, side)?;
            let dofs = active.dofs();
            let beta = problem.beta[side];
            for (q, x) in rule.points.iter().enumerate() {
                let w = rule.weights[q];
                let (ux, uy) = exact.eval_grad(side, x);
                let grads = active.gradients(x);
                for i in 0..dofs.len() {
                    out[dofs[i]] += w * beta * (ux * grads[i].0 + uy * grads[i].1);
                }
            }
        }
    }

    for face in 0..mesh.faces.len() {
        let f = &mesh.faces[face];
        let segments = face_segments(mesh, phi, face, &topo.face_class[face]);
        let h_e = f.length;

        if f.is_boundary() {
            let cell = f.cells[0];
            let n = face_normal_from(mesh, face, cell);
            for (p, q, side) in segments {
                let rule = segment_rule(&p, &q, quad_order);
                let active = space.active(cell, side)?;
                let dofs = active.dofs();
                let beta = problem.beta[side];
                let eta = penalty.eta[side];
                for (k, x) in rule.points.iter().enumerate() {
                    let w = rule.weights[k];
                    let u = exact.eval(side, x);
                    let (ux, uy) = exact.eval_grad(side, x);
                    let uflux = beta * (ux * n.x + uy * n.y);
                    let vals = active.values(x);
                    let grads = active.gradients(x);
                    for i in 0..dofs.len() {
                        let vflux = beta * (grads[i].0 * n.x + grads[i].1 * n.y);
                        out[dofs[i]] += w
                            * (-uflux * vals[i] - vflux * u
                                + eta / h_e * u * vals[i]);
                    }
                }
            }
            continue;
        }

        let (cl, cr) = (f.cells[0], f.cells[1]);
        let n = face_normal_from(mesh, face, cl);
        for (p, q, side) in segments {
            let rule = segment_rule(&p, &q, quad_order);
            let beta = problem.beta[side];
            let left = space.active(cl, side)?;
            let right = space.active(cr, side)?;
            for (k, x) in rule.points.iter().enumerate() {
                let w = rule.weights[k];
                // The exact piece is single valued within the side, so
                // its jump vanishes; only the consistency term acts.
                let (ux, uy) = exact.eval_grad(side, x);
                let uflux = beta * (ux * n.x + uy * n.y);
                let vl = left.values(x);
                for (i, &d) in left.dofs().iter().enumerate() {
                    out[d] += w * (-uflux) * vl[i];
                }
                let vr = right.values(x);
                for (i, &d) in right.dofs().iter().enumerate() {
                    out[d] -= w * (-uflux) * vr[i];
                }
            }
        }
    }

    for &cell in &topo.cut_cell_indices() {
        let geom = &topo.cut_cells[&cell];
        let rule = crate::cut::curved_polyline_rule(&geom.polyline, phi, quad_order);
        let h_k = mesh.cell_diameter[cell];
        interface_apply(
            &mut out,
            space,
            problem,
            exact,
            &penalty,
            h_k,
            &rule,
            &|x| phi.unit_normal(x),
            cell,
            cell,
        )?;
    }

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
        let n = face_normal_from(mesh, face, c1);
        let a = mesh.nodes[f.nodes[0]];
        let b = mesh.nodes[f.nodes[1]];
        let rule = segment_rule(&a, &b, quad_order);
        interface_apply(
            &mut out,
            space,
            problem,
            exact,
            &penalty,
            f.length,
            &rule,
            &move |_| n,
            c0,
            c1,
        )?;
    }

    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn interface_apply(
    out: &mut DVector<f64>,
    space: &GlobalSpace,
    problem: &ProblemData,
    exact: &ExactSolution,
    penalty: &PenaltyConfig,
    h_pen: f64,
    rule: &crate::quadrature::QuadratureRule,
    normal: &dyn Fn(&Point2) -> Point2,
    cell0: usize,
    cell1: usize,
) -> Result<()> {
    let side0 = space.active(cell0, 0)?;
    let side1 = space.active(cell1, 1)?;
    let eta = penalty.eta_interface;
    let [w0, w1] = penalty.interface_weights;
    for (k, x) in rule.points.iter().enumerate() {
        let w = rule.weights[k];
        let n = normal(x);
        let u0 = exact.eval(0, x);
        let u1 = exact.eval(1, x);
        let (u0x, u0y) = exact.eval_grad(0, x);
        let (u1x, u1y) = exact.eval_grad(1, x);
        let jump_u = u1 - u0;
        let flux_u = w1 * problem.beta[1] * (u1x * n.x + u1y * n.y)
            + w0 * problem.beta[0] * (u0x * n.x + u0y * n.y);
        let v0 = side0.values(x);
        let g0 = side0.gradients(x);
        for (i, &d) in side0.dofs().iter().enumerate() {
            let vflux = w0 * problem.beta[0] * (g0[i].0 * n.x + g0[i].1 * n.y);
            // v contributes -v0 to the jump.
            out[d] += w
                * (-(flux_u * (-v0[i]) + jump_u * vflux)
                    + eta / h_pen * jump_u * (-v0[i]));
        }
        let v1 = side1.values(x);
        let g1 = side1.gradients(x);
        for (i, &d) in side1.dofs().iter().enumerate() {
            let vflux = w1 * problem.beta[1] * (g1[i].0 * n.x + g1[i].1 * n.y);
            out[d] += w
                * (-(flux_u * v1[i] + jump_u * vflux)
                    + eta / h_pen * jump_u * v1[i]);
        }
    }
    Ok(())
}

/// Max-norm Galerkin orthogonality residual |b_h(u, lambda_j) - l_h(lambda_j)|
/// over all basis functions, evaluated with elevated quadrature.
#[allow(clippy::too_many_arguments)]
pub fn galerkin_orthogonality(
    mesh: &PolygonalMesh,
    phi: &LevelSet,
    topo: &CutTopology,
    space: &GlobalSpace,
    problem: &ProblemData,
    exact: &ExactSolution,
    penalty: PenaltyConfig,
    quad_order: usize,
) -> Result<f64> {
    let sys = assemble(mesh, phi, topo, space, problem, penalty, quad_order)?;
    let bu = apply_exact(mesh, phi, topo, space, problem, exact, penalty, quad_order)?;
    let r = bu - sys.rhs;
    Ok(r.amax())
}

/// Residual of a candidate coefficient vector: max |(A u - rhs)_j|.
pub fn algebraic_residual(sys: &DGSystem, u: &DVector<f64>) -> f64 {
    let mut r = -sys.rhs.clone();
    for &(i, j, v) in &sys.triplets {
        r[i] += v * u[j];
    }
    r.amax()
}
