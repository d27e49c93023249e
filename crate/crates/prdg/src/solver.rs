//! Linear solvers for the assembled SPD systems: a profile (skyline)
//! Cholesky factorization for direct solves and Jacobi-preconditioned
//! conjugate gradients, plus a rough condition-number estimate.

use nalgebra::DVector;

use crate::assembly::DGSystem;
use crate::error::{PrdgError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Direct,
    Cg,
}

impl std::str::FromStr for SolverKind {
    type Err = PrdgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(SolverKind::Direct),
            "cg" => Ok(SolverKind::Cg),
            other => Err(PrdgError::Argument(format!(
                "unknown solver '{other}' (expected 'direct' or 'cg')"
            ))),
        }
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        // row_ptr[i + 1] temporarily counts entries of row i.
        let mut last = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn from_system(sys: &DGSystem) -> Self {
        CsrMatrix::from_triplets(sys.n, &sys.triplets)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n);
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
        y
    }

    pub fn diagonal(&self) -> DVector<f64> {
        let mut d = DVector::zeros(self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[k] == i {
                    d[i] = self.values[k];
                }
            }
        }
        d
    }

    /// Maximum absolute asymmetry, for diagnostics.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let mut aji = 0.0;
                for l in self.row_ptr[j]..self.row_ptr[j + 1] {
                    if self.col_idx[l] == i {
                        aji = self.values[l];
                    }
                }
                worst = worst.max((self.values[k] - aji).abs());
            }
        }
        worst
    }
}

/// Convergence report of an iterative solve.
#[derive(Debug, Clone)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients. `tol` is relative to the
/// right-hand-side norm.
pub fn solve_cg(
    a: &CsrMatrix,
    b: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(DVector<f64>, SolveStats)> {
    let n = a.n;
    let d = a.diagonal();
    if d.iter().any(|&v| v <= 0.0) {
        return Err(PrdgError::Solver(
            "non-positive diagonal entry; system is not SPD (try a larger penalty)".into(),
        ));
    }
    let b_norm = b.norm();
    if b_norm == 0.0 {
        return Ok((
            DVector::zeros(n),
            SolveStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let mut x = DVector::zeros(n);
    let mut r = b.clone();
    let mut z = r.component_div(&d);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for it in 0..max_iter {
        let ap = a.mul_vec(&p);
        let pap = p.dot(&ap);
        if pap <= 0.0 {
            return Err(PrdgError::Solver(format!(
                "CG broke down at iteration {it}: p'Ap = {pap} (system not SPD?)"
            )));
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let res = r.norm() / b_norm;
        if res < tol {
            return Ok((
                x,
                SolveStats {
                    iterations: it + 1,
                    residual: res,
                },
            ));
        }
        z = r.component_div(&d);
        let rz_new = r.dot(&z);
        let beta = rz_new / rz;
        rz = rz_new;
        p = &z + beta * &p;
    }
    Err(PrdgError::Solver(format!(
        "CG did not converge in {max_iter} iterations (residual {:.3e})",
        r.norm() / b_norm
    )))
}

/// Profile (skyline) Cholesky factorization of an SPD matrix. Stores
/// each row from its first nonzero column to the diagonal; fill-in
/// stays inside the profile, which is small when DOFs are numbered
/// along the mesh.
pub struct SkylineCholesky {
    n: usize,
    /// first[i]: first stored column of row i.
    first: Vec<usize>,
    /// rows[i]: entries of L in columns first[i]..=i.
    rows: Vec<Vec<f64>>,
}

impl SkylineCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        // Scale for deciding when a pivot counts as zero rather than
        // negative: the patch construction can make the global basis
        // linearly dependent on very coarse meshes, leaving the system
        // positive semidefinite with a kernel that does not affect the
        // represented function. Such pivots are pinned so the dependent
        // unknowns solve to zero.
        let pivot_tol = 1e-10 * a.diagonal().amax();
        const PINNED: f64 = 1e150;
        let n = a.n;
        let mut first = vec![0usize; n];
        for (i, fi) in first.iter_mut().enumerate() {
            let mut lo = i;
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                if a.col_idx[k] <= i {
                    lo = lo.min(a.col_idx[k]);
                }
            }
            *fi = lo;
        }
        // A column below the profile of an earlier row cannot fill in,
        // but row i's profile must start no earlier than needed; the
        // envelope is already monotone enough for the standard factor.
        let mut rows: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; i - first[i] + 1]).collect();
        for i in 0..n {
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                let j = a.col_idx[k];
                if j <= i {
                    rows[i][j - first[i]] = a.values[k];
                }
            }
        }
        // In-place factorization: L[i][j] = (A[i][j] - sum_k L[i][k] L[j][k]) / L[j][j].
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let lo = fi.max(fj);
                let mut s = rows[i][j - fi];
                for k in lo..j {
                    s -= rows[i][k - fi] * rows[j][k - fj];
                }
                if j < i {
                    let d = rows[j][j - fj];
                    rows[i][j - fi] = s / d;
                } else if s <= pivot_tol {
                    if s < -pivot_tol {
                        return Err(PrdgError::Solver(format!(
                            "Cholesky pivot {s:.3e} at row {i}; system is not \
                             positive definite (try a larger penalty)"
                        )));
                    }
                    rows[i][j - fi] = PINNED;
                } else {
                    rows[i][j - fi] = s.sqrt();
                }
            }
        }
        Ok(SkylineCholesky { n, first, rows })
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        // Forward: L y = b.
        let mut y = b.clone();
        for i in 0..n {
            let fi = self.first[i];
            let mut s = y[i];
            for k in fi..i {
                s -= self.rows[i][k - fi] * y[k];
            }
            y[i] = s / self.rows[i][i - fi];
        }
        // Backward: L' x = y.
        for i in (0..n).rev() {
            let fi = self.first[i];
            y[i] /= self.rows[i][i - fi];
            let yi = y[i];
            for k in fi..i {
                y[k] -= self.rows[i][k - fi] * yi;
            }
        }
        y
    }
}

/// Solves the assembled system with the requested method. The CG path
/// uses a 1e-12 relative tolerance so both methods agree closely.
pub fn solve(sys: &DGSystem, kind: SolverKind) -> Result<(DVector<f64>, SolveStats)> {
    let a = CsrMatrix::from_system(sys);
    match kind {
        SolverKind::Direct => {
            let chol = SkylineCholesky::factor(&a)?;
            let x = chol.solve(&sys.rhs);
            let res = (a.mul_vec(&x) - &sys.rhs).norm() / sys.rhs.norm().max(1e-300);
            Ok((
                x,
                SolveStats {
                    iterations: 1,
                    residual: res,
                },
            ))
        }
        SolverKind::Cg => solve_cg(&a, &sys.rhs, 1e-12, 20 * a.n.max(100)),
    }
}

/// Rough 2-norm condition estimate: power iteration for the largest
/// eigenvalue, inverse power iteration (via Cholesky) for the smallest.
pub fn condition_estimate(a: &CsrMatrix, iters: usize) -> Result<f64> {
    let n = a.n;
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i % 7) as f64 * 0.1);
    v /= v.norm();
    let mut lam_max = 0.0;
    for _ in 0..iters {
        let w = a.mul_vec(&v);
        lam_max = v.dot(&w);
        v = &w / w.norm();
    }
    let chol = SkylineCholesky::factor(a)?;
    let mut u = DVector::from_fn(n, |i, _| 1.0 - (i % 5) as f64 * 0.05);
    u /= u.norm();
    let mut lam_min_inv = 0.0;
    for _ in 0..iters {
        let w = chol.solve(&u);
        lam_min_inv = u.dot(&w);
        u = &w / w.norm();
    }
    Ok(lam_max * lam_min_inv)
}
