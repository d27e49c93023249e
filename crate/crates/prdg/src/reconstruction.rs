//! Least-squares reconstruction operator: per-patch coefficient maps,
//! global DOF numbering and basis evaluation.
//!
//! Each patch stores the matrix mapping nodal values on its sampling
//! nodes to monomial coefficients in the patch frame, i.e. the
//! least-squares pseudo-inverse of the scaled Vandermonde. The map is
//! computed by QR factorization; the normal equations are never formed.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::basis::{self, Frame};
use crate::cut::CutTopology;
use crate::error::{PrdgError, Result};
use crate::geom::Point2;
use crate::mesh::PolygonalMesh;
use crate::patch::{self, ElementPatch, PatchTable};

#[derive(Debug, Clone)]
pub struct LocalBasis {
    pub frame: Frame,
    /// dim P_m x N map from nodal values to monomial coefficients.
    pub coeff_map: DMatrix<f64>,
}

/// Least-squares coefficient map pinv(A) = (A^T A)^{-1} A^T computed via
/// QR. Errors on rank deficiency.
pub fn least_squares_coeff_map(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, d) = a.shape();
    if n < d {
        return Err(PrdgError::InvalidParameter(format!(
            "least squares needs at least {d} samples, got {n}"
        )));
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let max_diag = (0..d).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..d).any(|i| r[(i, i)].abs() < 1e-12 * max_diag) {
        return Err(PrdgError::InvalidParameter(
            "rank-deficient least squares system".into(),
        ));
    }
    let qt = qr.q().transpose();
    r.solve_upper_triangular(&qt)
        .ok_or_else(|| PrdgError::InvalidParameter("singular R factor".into()))
}

/// Fits the local basis of one patch.
pub fn fit_local_basis(patch: &ElementPatch, m: usize) -> Result<LocalBasis> {
    let a = patch::vandermonde(patch, m);
    let coeff_map = least_squares_coeff_map(&a).map_err(|_| PrdgError::Unisolvence {
        cell: patch.anchor_cell,
        side: patch.side,
        rank: patch::check_unisolvence(patch, m).rank,
        needed: basis::dim_pm(m),
    })?;
    Ok(LocalBasis {
        frame: patch.frame,
        coeff_map,
    })
}

/// The global reconstruction space: one DOF per element per occupied
/// side, with the governing local basis per (cell, side).
pub struct GlobalSpace {
    pub m: usize,
    /// dof index -> (cell, side).
    pub dofs: Vec<(usize, usize)>,
    dof_of: HashMap<(usize, usize), usize>,
    pub table: PatchTable,
    /// Per patch, parallel to `table.patches`.
    pub bases: Vec<LocalBasis>,
    /// Per patch, global DOF ids of its members (on the patch side).
    patch_dofs: Vec<Vec<usize>>,
}

impl GlobalSpace {
    pub fn build(
        mesh: &PolygonalMesh,
        topology: &CutTopology,
        table: PatchTable,
        m: usize,
    ) -> Result<Self> {
        let mut dofs = Vec::new();
        let mut dof_of = HashMap::new();
        for cell in 0..mesh.n_cells() {
            for side in 0..2 {
                if topology.cell_on_side(cell, side) {
                    dof_of.insert((cell, side), dofs.len());
                    dofs.push((cell, side));
                }
            }
        }
        let bases: Result<Vec<LocalBasis>> = table
            .patches
            .iter()
            .map(|p| fit_local_basis(p, m))
            .collect();
        let bases = bases?;
        let patch_dofs = table
            .patches
            .iter()
            .map(|p| {
                p.members
                    .iter()
                    .map(|&c| dof_of[&(c, p.side)])
                    .collect::<Vec<usize>>()
            })
            .collect();
        Ok(GlobalSpace {
            m,
            dofs,
            dof_of,
            table,
            bases,
            patch_dofs,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.len()
    }

    pub fn dof_index(&self, cell: usize, side: usize) -> Option<usize> {
        self.dof_of.get(&(cell, side)).copied()
    }

    /// The basis active on (cell, side); errors for an unoccupied pair.
    pub fn active(&self, cell: usize, side: usize) -> Result<ActiveBasis<'_>> {
        let p = self
            .table
            .patch_index(cell, side)
            .ok_or_else(|| PrdgError::Assembly(format!(
                "no patch for cell {cell}, side {side}"
            )))?;
        Ok(ActiveBasis {
            space: self,
            patch: p,
        })
    }

    /// Values of all basis functions active on (cell, side) at x.
    pub fn evaluate_basis(&self, cell: usize, side: usize, x: &Point2) -> Result<Vec<f64>> {
        Ok(self.active(cell, side)?.values(x))
    }

    /// Gradients of all basis functions active on (cell, side) at x.
    pub fn evaluate_basis_gradient(
        &self,
        cell: usize,
        side: usize,
        x: &Point2,
    ) -> Result<Vec<(f64, f64)>> {
        Ok(self.active(cell, side)?.gradients(x))
    }

    /// Nodal quasi-interpolation: DOF (K, i) takes g_i(x_K). The two
    /// sides' functions must be evaluable at every member sampling node
    /// (smooth extensions of the exact pieces).
    pub fn interpolate(
        &self,
        mesh: &PolygonalMesh,
        g0: &dyn Fn(f64, f64) -> f64,
        g1: &dyn Fn(f64, f64) -> f64,
    ) -> DVector<f64> {
        let mut u = DVector::zeros(self.n_dofs());
        for (k, &(cell, side)) in self.dofs.iter().enumerate() {
            let x = mesh.cell_barycenter[cell];
            u[k] = if side == 0 { g0(x.x, x.y) } else { g1(x.x, x.y) };
        }
        u
    }

    /// Monomial coefficients of the discrete function on each patch.
    pub fn patch_coefficients(&self, u: &DVector<f64>) -> Vec<DVector<f64>> {
        self.table
            .patches
            .iter()
            .enumerate()
            .map(|(p, _)| {
                let vals = DVector::from_iterator(
                    self.patch_dofs[p].len(),
                    self.patch_dofs[p].iter().map(|&d| u[d]),
                );
                &self.bases[p].coeff_map * vals
            })
            .collect()
    }

    /// Value of the discrete function on (cell, side) at x given
    /// per-patch coefficients from `patch_coefficients`.
    pub fn eval_with_coeffs(
        &self,
        coeffs: &[DVector<f64>],
        cell: usize,
        side: usize,
        x: &Point2,
    ) -> f64 {
        let p = self.table.patch_index(cell, side).expect("occupied pair");
        let row = basis::monomial_row(self.m, &self.bases[p].frame, x);
        row.iter().zip(coeffs[p].iter()).map(|(a, b)| a * b).sum()
    }

    pub fn eval_gradient_with_coeffs(
        &self,
        coeffs: &[DVector<f64>],
        cell: usize,
        side: usize,
        x: &Point2,
    ) -> (f64, f64) {
        let p = self.table.patch_index(cell, side).expect("occupied pair");
        let rows = basis::monomial_gradient_rows(self.m, &self.bases[p].frame, x);
        let mut gx = 0.0;
        let mut gy = 0.0;
        for (k, (dx, dy)) in rows.iter().enumerate() {
            gx += dx * coeffs[p][k];
            gy += dy * coeffs[p][k];
        }
        (gx, gy)
    }
}

/// Basis functions of one patch as seen from a (cell, side) pair.
pub struct ActiveBasis<'a> {
    space: &'a GlobalSpace,
    patch: usize,
}

impl<'a> ActiveBasis<'a> {
    pub fn dofs(&self) -> &'a [usize] {
        &self.space.patch_dofs[self.patch]
    }

    pub fn len(&self) -> usize {
        self.dofs().len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs().is_empty()
    }

    pub fn values(&self, x: &Point2) -> Vec<f64> {
        let b = &self.space.bases[self.patch];
        let row = basis::monomial_row(self.space.m, &b.frame, x);
        (0..b.coeff_map.ncols())
            .map(|j| (0..row.len()).map(|k| row[k] * b.coeff_map[(k, j)]).sum())
            .collect()
    }

    pub fn gradients(&self, x: &Point2) -> Vec<(f64, f64)> {
        let b = &self.space.bases[self.patch];
        let rows = basis::monomial_gradient_rows(self.space.m, &b.frame, x);
        (0..b.coeff_map.ncols())
            .map(|j| {
                let mut gx = 0.0;
                let mut gy = 0.0;
                for (k, row) in rows.iter().enumerate() {
                    gx += row.0 * b.coeff_map[(k, j)];
                    gy += row.1 * b.coeff_map[(k, j)];
                }
                (gx, gy)
            })
            .collect()
    }
}
