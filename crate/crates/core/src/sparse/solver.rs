use std::time::{Duration, Instant};

use faer::prelude::*;
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use super::{SparseError, SparseMatrix};

/// Relative residual every solve must reach unless the caller asks otherwise.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Refinement sweeps attempted before a solve is declared failed.
const MAX_REFINEMENT: usize = 4;

/// Multiple of the unit roundoff in [`DirectSolver::rounding_floor`].
const FLOOR_FACTOR: f64 = f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolveReport {
    /// `||A x - b|| / ||b||`, recomputed with [`SparseMatrix::spmv`]
    /// (absolute residual when `b = 0`).
    pub relative_residual: f64,
    /// Smallest relative residual a rounded solution can show,
    /// `eps || |A| |x| + |b| || / ||b||`. Only a floor above the requested
    /// tolerance is ever used in its place.
    pub rounding_floor: f64,
    /// Iterative refinement sweeps on top of the direct solve.
    pub iterations: usize,
    pub wall_time: Duration,
}

/// Sparse LU factorization with fill-reducing column ordering and partial
/// pivoting. The factored matrix is kept so residuals can be recomputed.
pub struct DirectSolver {
    matrix: SparseMatrix,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    factor_time: Duration,
}

impl std::fmt::Debug for DirectSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirectSolver")
            .field("n", &self.matrix.nrows())
            .field("nnz", &self.matrix.nnz())
            .field("factor_time", &self.factor_time)
            .finish()
    }
}

impl DirectSolver {
    pub fn factorize(matrix: SparseMatrix) -> Result<Self, SparseError> {
        let n = matrix.nrows();
        if n != matrix.ncols() {
            return Err(SparseError::NotSquare { nrows: n, ncols: matrix.ncols() });
        }
        // Results must not depend on the thread pool.
        faer::set_global_parallelism(faer::Par::Seq);
        let start = Instant::now();
        let triplets: Vec<_> = matrix.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        let csc = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| SparseError::Backend(format!("{e:?}")))?;
        let lu = csc.sp_lu().map_err(|e| match e {
            LuError::SymbolicSingular { index } => SparseError::Singular { index },
            LuError::Generic(e) => SparseError::Backend(format!("{e:?}")),
        })?;
        Ok(Self { matrix, lu, factor_time: start.elapsed() })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn factor_time(&self) -> Duration {
        self.factor_time
    }

    fn apply_inverse(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = Mat::<f64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        self.lu.solve_in_place(x.as_mut());
        (0..rhs.len()).map(|i| x[(i, 0)]).collect()
    }

    fn residual(&self, x: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
        let mut r = vec![0.0; b.len()];
        self.matrix.residual_into(x, b, &mut r);
        let rn = norm2(&r);
        let bn = norm2(b);
        let rel = if bn > 0.0 { rn / bn } else { rn };
        (r, rel)
    }

    /// Relative residual left by rounding `x` to doubles: entries of `A x`
    /// that cancel down to `b` cannot do better than `eps |A| |x|`.
    pub fn rounding_floor(&self, x: &[f64], b: &[f64]) -> f64 {
        let (rp, ci, v) = (self.matrix.row_ptr(), self.matrix.col_idx(), self.matrix.values());
        let mut acc = 0.0;
        for (i, bi) in b.iter().enumerate() {
            let row: f64 = (rp[i]..rp[i + 1]).map(|k| (v[k] * x[ci[k]]).abs()).sum::<f64>() + bi.abs();
            acc += row * row;
        }
        let bn = norm2(b);
        FLOOR_FACTOR * acc.sqrt() / if bn > 0.0 { bn } else { 1.0 }
    }

    /// Solves `A x = b`, refining until the recomputed relative residual is
    /// at most `tol`, or at most the rounding floor when that is larger.
    pub fn solve(&self, b: &[f64], tol: f64) -> Result<(Vec<f64>, LinearSolveReport), SparseError> {
        let n = self.matrix.nrows();
        if b.len() != n {
            return Err(SparseError::DimensionMismatch { op: "solve", expected: (n, 1), found: (b.len(), 1) });
        }
        let start = Instant::now();
        let mut x = self.apply_inverse(b);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SparseError::NumericallySingular);
        }
        let (mut r, mut rel) = self.residual(&x, b);
        let mut iterations = 0;
        while rel > tol && iterations < MAX_REFINEMENT {
            let dx = self.apply_inverse(&r);
            if dx.iter().any(|v| !v.is_finite()) {
                return Err(SparseError::NumericallySingular);
            }
            let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
            let (r_new, rel_new) = self.residual(&candidate, b);
            iterations += 1;
            if !(rel_new < rel) {
                break;
            }
            x = candidate;
            r = r_new;
            rel = rel_new;
        }
        if !rel.is_finite() {
            return Err(SparseError::NumericallySingular);
        }
        let rounding_floor = self.rounding_floor(&x, b);
        if rel > tol.max(rounding_floor) {
            return Err(SparseError::ResidualTooLarge { residual: rel, tol: tol.max(rounding_floor) });
        }
        let report = LinearSolveReport { relative_residual: rel, rounding_floor, iterations, wall_time: start.elapsed() };
        Ok((x, report))
    }
}

/// Factorizes and solves in one call.
pub fn solve(a: &SparseMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, LinearSolveReport), SparseError> {
    if a.nrows() != a.ncols() {
        return Err(SparseError::NotSquare { nrows: a.nrows(), ncols: a.ncols() });
    }
    if b.len() != a.nrows() {
        return Err(SparseError::DimensionMismatch { op: "solve", expected: (a.nrows(), 1), found: (b.len(), 1) });
    }
    let start = Instant::now();
    let solver = DirectSolver::factorize(a.clone())?;
    let (x, mut report) = solver.solve(b, tol)?;
    report.wall_time = start.elapsed();
    Ok((x, report))
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system() {
        let b = vec![1.0, -2.5, 3.0, 1e-3];
        let (x, rep) = solve(&SparseMatrix::identity(4), &b, DEFAULT_TOL).unwrap();
        assert_eq!(x, b);
        assert_eq!(rep.iterations, 0);
        assert_eq!(rep.relative_residual, 0.0);
    }

    #[test]
    fn spd_two_by_two() {
        let a = SparseMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let (x, rep) = solve(&a, &[1.0, 1.0], DEFAULT_TOL).unwrap();
        assert!((x[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((x[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!(rep.relative_residual <= 1e-15);
    }

    #[test]
    fn zero_diagonal_needs_pivoting() {
        let a = SparseMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let (x, _) = solve(&a, &[2.0, 3.0], DEFAULT_TOL).unwrap();
        assert_eq!(x, vec![3.0, 2.0]);
    }

    #[test]
    fn singular_is_reported() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(solve(&a, &[1.0, 2.0], DEFAULT_TOL).is_err());
        let empty_row = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0)]);
        assert!(solve(&empty_row, &[1.0, 2.0], DEFAULT_TOL).is_err());
    }

    #[test]
    fn dimension_errors() {
        assert!(matches!(
            solve(&SparseMatrix::zeros(2, 3), &[1.0, 2.0], DEFAULT_TOL),
            Err(SparseError::NotSquare { .. })
        ));
        assert!(matches!(
            solve(&SparseMatrix::identity(2), &[1.0], DEFAULT_TOL),
            Err(SparseError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = SparseMatrix::from_dense(&[vec![3.0, 1.0], vec![-1.0, 2.0]]);
        let (x, rep) = solve(&a, &[0.0, 0.0], DEFAULT_TOL).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
        assert_eq!(rep.relative_residual, 0.0);
    }

    #[test]
    fn repeated_solves_are_deterministic() {
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0 + i as f64 * 0.01));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.5));
            }
            t.push((i, (i * 7) % n, 0.25));
        }
        let a = SparseMatrix::from_triplets(n, n, &t);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let (x1, r1) = solve(&a, &b, DEFAULT_TOL).unwrap();
        let (x2, _) = solve(&a, &b, DEFAULT_TOL).unwrap();
        assert_eq!(x1, x2);
        let ax = a.spmv(&x1).unwrap();
        let res: Vec<f64> = ax.iter().zip(&b).map(|(p, q)| p - q).collect();
        // plain and compensated residuals differ only by rounding
        assert!((norm2(&res) / norm2(&b) - r1.relative_residual).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn cancelling_rows_are_judged_against_the_rounding_floor() {
        // penalty block with a large near-null space, like a grad-div solve
        let g = 1e9;
        let a = SparseMatrix::from_dense(&[vec![1.0 + g, -g], vec![-g, 1.0 + g]]);
        let b = [1.0, 1.0 + 1e-7];
        let solver = DirectSolver::factorize(a).unwrap();
        let (x, rep) = solver.solve(&b, DEFAULT_TOL).unwrap();
        assert!(rep.rounding_floor > DEFAULT_TOL);
        assert!(rep.relative_residual <= rep.rounding_floor);
        assert!((solver.rounding_floor(&x, &b) - rep.rounding_floor).abs() == 0.0);
        let small = solver.rounding_floor(&[1.0, 1.0], &[1.0, 1.0]);
        assert!(small < 1e-6);
    }

    #[test]
    fn well_conditioned_floor_is_negligible() {
        let a = SparseMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let (_, rep) = solve(&a, &[1.0, 1.0], DEFAULT_TOL).unwrap();
        assert!(rep.rounding_floor < 1e-14);
    }
}
