//! Element patches: connected groups of same-side cells whose sampling
//! nodes support one least-squares polynomial fit.
//!
//! Pure cells grow their own patch ring by ring through face adjacency
//! within their side. A cut cell shares the patch of its uncut anchor on
//! each side; if ring growth missed the cut cell, it is inserted into the
//! anchor's patch so both keep fitting the identical polynomial.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::basis::{self, Frame};
use crate::cut::CutTopology;
use crate::error::{PrdgError, Result};
use crate::geom::Point2;
use crate::mesh::PolygonalMesh;

#[derive(Debug, Clone)]
pub struct ElementPatch {
    pub anchor_cell: usize,
    pub side: usize,
    /// Member cells S^i(K), in BFS ring order from the anchor.
    pub members: Vec<usize>,
    /// Sampling nodes: full-cell barycenters of the members.
    pub nodes: Vec<Point2>,
    /// Local frame: centered at the anchor barycenter, scaled by the
    /// patch radius.
    pub frame: Frame,
}

impl ElementPatch {
    pub fn cardinality(&self) -> usize {
        self.members.len()
    }
}

#[derive(Debug, Clone)]
pub struct PatchTable {
    pub patches: Vec<ElementPatch>,
    patch_of: HashMap<(usize, usize), usize>,
    /// Cut cells that had to be inserted into their anchor's patch.
    pub augmented: Vec<(usize, usize)>,
}

impl PatchTable {
    pub fn patch_index(&self, cell: usize, side: usize) -> Option<usize> {
        self.patch_of.get(&(cell, side)).copied()
    }

    pub fn patch(&self, cell: usize, side: usize) -> Option<&ElementPatch> {
        self.patch_index(cell, side).map(|i| &self.patches[i])
    }
}

/// Diagnostics from the unisolvence check of one patch.
#[derive(Debug, Clone)]
pub struct UnisolvenceReport {
    pub rank: usize,
    pub needed: usize,
    pub condition: f64,
}

impl UnisolvenceReport {
    pub fn is_unisolvent(&self) -> bool {
        self.rank >= self.needed
    }
}

/// Builds all element patches. `target` is the minimum patch cardinality
/// (at least dim P_m).
pub fn build_patches(
    mesh: &PolygonalMesh,
    topology: &CutTopology,
    m: usize,
    target: usize,
) -> Result<PatchTable> {
    if target < basis::dim_pm(m) {
        return Err(PrdgError::InvalidParameter(format!(
            "patch target {target} is below dim P_{m} = {}",
            basis::dim_pm(m)
        )));
    }

    let mut patches: Vec<ElementPatch> = Vec::new();
    let mut patch_of: HashMap<(usize, usize), usize> = HashMap::new();

    // Pure cells grow their own patches.
    for cell in 0..mesh.n_cells() {
        if topology.is_cut(cell) {
            continue;
        }
        for side in 0..2 {
            if !topology.cell_on_side(cell, side) {
                continue;
            }
            let members = grow_patch(mesh, topology, cell, side, target)?;
            let idx = patches.len();
            patches.push(make_patch(mesh, cell, side, members));
            patch_of.insert((cell, side), idx);
        }
    }

    // Cut cells borrow their anchors' patches.
    let mut augmented = Vec::new();
    for cell in topology.cut_cell_indices() {
        let geometry = &topology.cut_cells[&cell];
        for side in 0..2 {
            let anchor = geometry.anchor[side];
            let idx = *patch_of.get(&(anchor, side)).ok_or(PrdgError::Patch {
                cell,
                side,
                message: format!("anchor {anchor} has no side-{side} patch"),
            })?;
            if !patches[idx].members.contains(&cell) {
                patches[idx].members.push(cell);
                patches[idx].nodes.push(mesh.cell_barycenter[cell]);
                refresh_frame(mesh, &mut patches[idx]);
                augmented.push((cell, side));
            }
            patch_of.insert((cell, side), idx);
        }
    }

    Ok(PatchTable {
        patches,
        patch_of,
        augmented,
    })
}

/// Ring growth through face adjacency restricted to T_h^side; stops at
/// the first ring reaching `target`, keeping the full ring.
fn grow_patch(
    mesh: &PolygonalMesh,
    topology: &CutTopology,
    cell: usize,
    side: usize,
    target: usize,
) -> Result<Vec<usize>> {
    let mut members = vec![cell];
    let mut in_patch = vec![false; mesh.n_cells()];
    in_patch[cell] = true;
    let mut frontier = vec![cell];
    while members.len() < target {
        let mut next = Vec::new();
        for &c in &frontier {
            for &nbr in &mesh.face_adjacency[c] {
                if !in_patch[nbr] && topology.cell_on_side(nbr, side) {
                    in_patch[nbr] = true;
                    next.push(nbr);
                }
            }
        }
        if next.is_empty() {
            return Err(PrdgError::Patch {
                cell,
                side,
                message: format!(
                    "growth stalled at {} members (target {target}); side-{side} region \
                     is disconnected here",
                    members.len()
                ),
            });
        }
        members.extend(next.iter().cloned());
        frontier = next;
    }
    Ok(members)
}

fn make_patch(mesh: &PolygonalMesh, anchor: usize, side: usize, members: Vec<usize>) -> ElementPatch {
    let nodes: Vec<Point2> = members
        .iter()
        .map(|&c| mesh.cell_barycenter[c])
        .collect();
    let mut patch = ElementPatch {
        anchor_cell: anchor,
        side,
        members,
        nodes,
        frame: Frame {
            center: mesh.cell_barycenter[anchor],
            scale: 1.0,
        },
    };
    refresh_frame(mesh, &mut patch);
    patch
}

fn refresh_frame(mesh: &PolygonalMesh, patch: &mut ElementPatch) {
    let center = mesh.cell_barycenter[patch.anchor_cell];
    let radius = patch
        .nodes
        .iter()
        .map(|p| p.dist(&center))
        .fold(0.0, f64::max)
        .max(0.5 * mesh.cell_diameter[patch.anchor_cell]);
    patch.frame = Frame {
        center,
        scale: radius,
    };
}

/// Scaled Vandermonde of the patch: rows are monomial values at the
/// sampling nodes in the local frame.
pub fn vandermonde(patch: &ElementPatch, m: usize) -> DMatrix<f64> {
    let d = basis::dim_pm(m);
    let n = patch.nodes.len();
    DMatrix::from_fn(n, d, |i, j| {
        basis::monomial_row(m, &patch.frame, &patch.nodes[i])[j]
    })
}

/// Rank and conditioning of the patch Vandermonde (Assumption-3 check).
pub fn check_unisolvence(patch: &ElementPatch, m: usize) -> UnisolvenceReport {
    let a = vandermonde(patch, m);
    let needed = basis::dim_pm(m);
    let svd = a.svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = smax * 1e-10 * (patch.nodes.len().max(needed) as f64);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let smin_pos = svd
        .singular_values
        .iter()
        .cloned()
        .filter(|&s| s > tol)
        .fold(f64::INFINITY, f64::min);
    UnisolvenceReport {
        rank,
        needed,
        condition: if rank == 0 { f64::INFINITY } else { smax / smin_pos },
    }
}

/// Computable surrogate for the stability constant Lambda(m, S):
/// sqrt(N) * max over probe points of sqrt(v(x)^T (A^T A)^{-1} v(x)).
/// Probe points are the vertices, barycenter, and edge midpoints of every
/// member cell, refined `probe_density` levels toward the barycenter.
pub fn estimate_lambda(
    mesh: &PolygonalMesh,
    patch: &ElementPatch,
    m: usize,
    probe_density: usize,
) -> Result<f64> {
    let a = vandermonde(patch, m);
    let n = patch.nodes.len() as f64;
    // Cholesky of the (small) normal matrix gives v^T (A^T A)^{-1} v as
    // a triangular solve.
    let ata = a.transpose() * &a;
    let chol = ata.cholesky().ok_or(PrdgError::Unisolvence {
        cell: patch.anchor_cell,
        side: patch.side,
        rank: check_unisolvence(patch, m).rank,
        needed: basis::dim_pm(m),
    })?;
    let l = chol.l();

    let mut worst: f64 = 0.0;
    for &cell in &patch.members {
        let verts = mesh.cell_vertices(cell);
        let bc = mesh.cell_barycenter[cell];
        let mut probes: Vec<Point2> = verts.clone();
        probes.push(bc);
        let nv = verts.len();
        for i in 0..nv {
            probes.push(verts[i].lerp(&verts[(i + 1) % nv], 0.5));
        }
        for level in 1..=probe_density {
            let t = level as f64 / (probe_density + 1) as f64;
            for v in &verts {
                probes.push(bc.lerp(v, t));
            }
        }
        for p in &probes {
            let v = nalgebra::DVector::from_vec(basis::monomial_row(m, &patch.frame, p));
            // Solve L w = v; then v^T (A^T A)^{-1} v = |w|^2.
            let w = l.solve_lower_triangular(&v).ok_or(PrdgError::Unisolvence {
                cell: patch.anchor_cell,
                side: patch.side,
                rank: 0,
                needed: basis::dim_pm(m),
            })?;
            worst = worst.max(w.norm_squared());
        }
    }
    Ok(n.sqrt() * worst.sqrt())
}
