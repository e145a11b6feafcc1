//! Sparse matrices and linear solvers.
//!
//! Direct factorizations come from `faer`; symmetric positive definite
//! systems larger than [`SolverOptions::direct_limit`] fall back to
//! Jacobi-preconditioned conjugate gradients.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted, duplicate-free rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl Csr {
    /// Builds from `(row, col, value)` triplets, summing duplicates.
    /// The result does not depend on triplet order beyond floating-point
    /// summation order of duplicates, which is kept stable.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut trips: Vec<(usize, usize, f64)>) -> Self {
        trips.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(trips.len());
        let mut values: Vec<f64> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trips {
            debug_assert!(r < n_rows && c < n_cols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .into_par_iter()
            .with_min_len(512)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `self - other`, same shape.
    pub fn sub(&self, other: &Csr) -> Csr {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let mut trips = self.triplets();
        trips.extend(other.triplets().into_iter().map(|(i, j, v)| (i, j, -v)));
        Csr::from_triplets(self.n_rows, self.n_cols, trips)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n_rows)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .collect()
    }

    /// Rows and columns restricted to the given index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Csr {
        let mut col_map = vec![usize::MAX; self.n_cols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut trips = Vec::new();
        for (ri, &r) in rows.iter().enumerate() {
            for (j, v) in self.row(r) {
                if col_map[j] != usize::MAX {
                    trips.push((ri, col_map[j], v));
                }
            }
        }
        Csr::from_triplets(rows.len(), cols.len(), trips)
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let mut worst: f64 = 0.0;
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let trips: Vec<Triplet<usize, usize, f64>> =
            self.triplets().into_iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.n_rows, self.n_cols, &trips)
            .map_err(|e| Error::SingularSystem(format!("matrix construction failed: {e:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Systems with more unknowns than this use iterative solves when SPD.
    pub direct_limit: usize,
    pub cg_tolerance: f64,
    pub cg_max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            direct_limit: 200_000,
            cg_tolerance: 1e-12,
            cg_max_iterations: 20_000,
        }
    }
}

enum Backend {
    Cholesky(Box<Llt<usize, f64>>),
    Lu(Box<Lu<usize, f64>>),
    Cg { matrix: Csr, inv_diag: Vec<f64>, options: SolverOptions },
}

/// A reusable solver for one fixed matrix.
pub struct LinearSolver {
    n: usize,
    backend: Backend,
}

impl std::fmt::Debug for LinearSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearSolver").field("n", &self.n).field("kind", &self.kind()).finish()
    }
}

impl LinearSolver {
    /// Factorization for a symmetric positive definite matrix.
    pub fn spd(matrix: &Csr, options: &SolverOptions) -> Result<Self> {
        let n = square(matrix)?;
        if n > options.direct_limit {
            let inv_diag = matrix
                .diagonal()
                .iter()
                .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
                .collect();
            return Ok(LinearSolver {
                n,
                backend: Backend::Cg {
                    matrix: matrix.clone(),
                    inv_diag,
                    options: *options,
                },
            });
        }
        let llt = matrix
            .to_faer()?
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::SingularSystem(format!("Cholesky factorization failed: {e:?}")))?;
        Ok(LinearSolver {
            n,
            backend: Backend::Cholesky(Box::new(llt)),
        })
    }

    /// LU factorization for a general (possibly indefinite) matrix.
    pub fn general(matrix: &Csr) -> Result<Self> {
        let n = square(matrix)?;
        let lu = matrix
            .to_faer()?
            .sp_lu()
            .map_err(|e| Error::SingularSystem(format!("LU factorization failed: {e:?}")))?;
        Ok(LinearSolver {
            n,
            backend: Backend::Lu(Box::new(lu)),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &'static str {
        match self.backend {
            Backend::Cholesky(_) => "cholesky",
            Backend::Lu(_) => "lu",
            Backend::Cg { .. } => "cg",
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(Error::param("rhs", format!("length {} != {}", rhs.len(), self.n)));
        }
        if self.n == 0 {
            return Ok(Vec::new());
        }
        let out = match &self.backend {
            Backend::Cholesky(f) => faer_solve(f.as_ref(), rhs),
            Backend::Lu(f) => faer_solve(f.as_ref(), rhs),
            Backend::Cg {
                matrix,
                inv_diag,
                options,
            } => conjugate_gradient(matrix, inv_diag, rhs, options)?,
        };
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem("solution contains non-finite entries".into()));
        }
        Ok(out)
    }
}

fn square(m: &Csr) -> Result<usize> {
    if m.n_rows != m.n_cols {
        return Err(Error::param("matrix", format!("{}x{} is not square", m.n_rows, m.n_cols)));
    }
    Ok(m.n_rows)
}

fn faer_solve<S: Solve<f64>>(f: &S, rhs: &[f64]) -> Vec<f64> {
    let mut b = Mat::<f64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    f.solve_in_place(&mut b);
    (0..rhs.len()).map(|i| b[(i, 0)]).collect()
}

/// Jacobi-preconditioned conjugate gradients.
pub fn conjugate_gradient(a: &Csr, inv_diag: &[f64], b: &[f64], opts: &SolverOptions) -> Result<Vec<f64>> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 0..opts.cg_max_iterations {
        let ap = a.matvec(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm2(&r) / bnorm;
        if rel < opts.cg_tolerance {
            log::debug!("cg converged in {} iterations", it + 1);
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::LinearSolverDiverged {
        iterations: opts.cg_max_iterations,
        residual: norm2(&r) / bnorm,
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> Csr {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        Csr::from_triplets(n, n, t)
    }

    #[test]
    fn duplicates_are_summed() {
        let m = Csr::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, 2.0), (0, 0, 3.0)]);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn direct_and_iterative_agree() {
        let a = laplacian_1d(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let direct = LinearSolver::spd(&a, &SolverOptions::default()).unwrap();
        let opts = SolverOptions {
            direct_limit: 10,
            ..Default::default()
        };
        let cg = LinearSolver::spd(&a, &opts).unwrap();
        assert_eq!(cg.kind(), "cg");
        let x1 = direct.solve(&b).unwrap();
        let x2 = cg.solve(&b).unwrap();
        let lu = LinearSolver::general(&a).unwrap().solve(&b).unwrap();
        for i in 0..50 {
            assert!((x1[i] - x2[i]).abs() < 1e-9);
            assert!((x1[i] - lu[i]).abs() < 1e-11);
        }
        let r = a.matvec(&x1);
        assert!(r.iter().zip(&b).all(|(r, b)| (r - b).abs() < 1e-12));
    }

    #[test]
    fn indefinite_system_solved_by_lu() {
        let a = laplacian_1d(20).sub(&Csr::identity(20).sub(&Csr::from_triplets(20, 20, vec![])));
        let mut shifted = a.triplets();
        shifted.extend((0..20).map(|i| (i, i, -1.5)));
        let m = Csr::from_triplets(20, 20, shifted);
        let b = vec![1.0; 20];
        let x = LinearSolver::general(&m).unwrap().solve(&b).unwrap();
        let r = m.matvec(&x);
        assert!(r.iter().zip(&b).all(|(r, b)| (r - b).abs() < 1e-10));
    }

    #[test]
    fn submatrix_picks_entries() {
        let a = laplacian_1d(5);
        let s = a.submatrix(&[1, 2, 3], &[1, 2, 3]);
        assert_eq!(s.get(0, 0), 2.0);
        assert_eq!(s.get(0, 1), -1.0);
        assert_eq!(s.asymmetry(), 0.0);
    }
}
