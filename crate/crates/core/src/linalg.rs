//! Shared linear-algebra plumbing: the operator trait used by iterative
//! solvers, a compressed sparse row matrix over complex entries, small
//! vector kernels, and a facade over the dense symmetric/Hermitian
//! eigensolvers so the backend is confined to this module.

use faer::Mat;
use num_complex::Complex64;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Keep the dense eigensolver backend on a single thread. Sweeps parallelize
/// over realizations, one solve per worker; a nested solver pool on top of
/// that only adds contention.
pub fn disable_solver_threads() {
    faer::set_global_parallelism(faer::Par::Seq);
}

/// Hermitian linear operator given by its action on a vector.
///
/// Implementations must be thread-safe: block solvers apply the operator to
/// independent columns in parallel.
pub trait HermitianOp: Sync {
    fn dim(&self) -> usize;

    /// `y = H x`. Both slices have length `dim()`.
    fn apply_to(&self, x: &[Complex64], y: &mut [Complex64]);
}

/// Compressed sparse row matrix with complex entries.
///
/// Column indices are strictly increasing within each row; entries with value
/// exactly zero may be stored (the pattern is decided by structure, not by
/// coupling values, so patterns are stable across realizations).
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
}

impl CsrMatrix {
    /// Build from per-row entry lists. Each row must be sorted by column with
    /// no duplicates; columns must lie in `0..dim`.
    pub fn from_rows(dim: usize, rows: Vec<Vec<(u32, Complex64)>>) -> Result<Self> {
        if rows.len() != dim {
            return Err(Error::validation(format!(
                "expected {dim} rows, got {}",
                rows.len()
            )));
        }
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for (r, row) in rows.into_iter().enumerate() {
            let mut prev: Option<u32> = None;
            for (c, v) in row {
                if c as usize >= dim {
                    return Err(Error::validation(format!(
                        "row {r}: column {c} out of range for dimension {dim}"
                    )));
                }
                if prev.is_some_and(|p| p >= c) {
                    return Err(Error::validation(format!(
                        "row {r}: columns not strictly increasing at {c}"
                    )));
                }
                prev = Some(c);
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(CsrMatrix {
            dim,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> (&[u32], &[Complex64]) {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn cols(&self) -> &[u32] {
        &self.cols
    }

    pub fn values(&self) -> &[Complex64] {
        &self.vals
    }

    fn matvec_rows(&self, x: &[Complex64], y: &mut [Complex64], first_row: usize) {
        for (i, yi) in y.iter_mut().enumerate() {
            let r = first_row + i;
            let lo = self.row_ptr[r];
            let hi = self.row_ptr[r + 1];
            let mut acc = Complex64::new(0.0, 0.0);
            for k in lo..hi {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            *yi = acc;
        }
    }

    /// `y = A x`, parallel over row blocks when the `parallel` feature is on.
    /// Each row is accumulated sequentially, so results are identical to
    /// [`CsrMatrix::matvec_seq`] bit for bit.
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        let chunk = row_chunk(self.dim);
        crate::par_chunks_mut!(&mut y[..], chunk)
            .enumerate()
            .for_each(|(ci, yc)| self.matvec_rows(x, yc, ci * chunk));
    }

    /// Sequential reference matvec; kept public so benchmarks can compare the
    /// parallel path against it within one build.
    pub fn matvec_seq(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        self.matvec_rows(x, y, 0);
    }

    /// Dense copy, column-major.
    pub fn to_dense(&self) -> Mat<Complex64> {
        let mut m = Mat::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                m[(r, *c as usize)] = *v;
            }
        }
        m
    }

    /// Largest entrywise deviation from Hermitian symmetry, `max |a_rc - conj(a_cr)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                let mirror = self.get(*c as usize, r).unwrap_or(Complex64::new(0.0, 0.0));
                worst = worst.max((v - mirror.conj()).norm());
            }
        }
        worst
    }

    /// Entry lookup by binary search within the row.
    pub fn get(&self, r: usize, c: usize) -> Option<Complex64> {
        let (cols, vals) = self.row(r);
        cols.binary_search(&(c as u32)).ok().map(|k| vals[k])
    }

    /// Infinity norm (max absolute row sum); cheap spectral-scale estimate.
    pub fn inf_norm(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).1.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

fn row_chunk(dim: usize) -> usize {
    // Coarse enough to amortize scheduling, fine enough to balance.
    (dim / 64).max(64)
}

impl HermitianOp for CsrMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_to(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.matvec(x, y);
    }
}

/// `conj(x) . y`
pub fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm2(x: &[Complex64]) -> f64 {
    x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// `y += alpha x`
pub fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [Complex64]) {
    for xi in x {
        *xi *= alpha;
    }
}

fn ensure_ascending(vals: &[f64]) -> Result<()> {
    if vals.windows(2).all(|w| w[0] <= w[1]) {
        Ok(())
    } else {
        Err(Error::numerical(
            "eigensolver returned eigenvalues out of order",
        ))
    }
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &Mat<f64>) -> Result<Vec<f64>> {
    let vals = a
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::numerical(format!("symmetric eigensolve failed: {e:?}")))?;
    ensure_ascending(&vals)?;
    Ok(vals)
}

/// Full eigendecomposition of a real symmetric matrix; eigenvalues ascending,
/// eigenvectors in matching columns.
pub fn symmetric_eigen(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let eig = a
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::numerical(format!("symmetric eigensolve failed: {e:?}")))?;
    let vals: Vec<f64> = (0..a.nrows()).map(|i| eig.S()[i]).collect();
    ensure_ascending(&vals)?;
    Ok((vals, eig.U().to_owned()))
}

/// Eigenvalues of a complex Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &Mat<Complex64>) -> Result<Vec<f64>> {
    let vals = a
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::numerical(format!("hermitian eigensolve failed: {e:?}")))?;
    ensure_ascending(&vals)?;
    Ok(vals)
}

/// Full eigendecomposition of a complex Hermitian matrix.
pub fn hermitian_eigen(a: &Mat<Complex64>) -> Result<(Vec<f64>, Mat<Complex64>)> {
    let eig = a
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::numerical(format!("hermitian eigensolve failed: {e:?}")))?;
    let vals: Vec<f64> = (0..a.nrows()).map(|i| eig.S()[i].re).collect();
    ensure_ascending(&vals)?;
    Ok((vals, eig.U().to_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn csr_rejects_malformed_rows() {
        assert!(CsrMatrix::from_rows(2, vec![vec![(0, c(1.0, 0.0)), (0, c(2.0, 0.0))], vec![]]).is_err());
        assert!(CsrMatrix::from_rows(2, vec![vec![(5, c(1.0, 0.0))], vec![]]).is_err());
        assert!(CsrMatrix::from_rows(2, vec![vec![]]).is_err());
    }

    #[test]
    fn matvec_matches_dense_action() {
        // [[2, i], [-i, 1]]
        let m = CsrMatrix::from_rows(
            2,
            vec![
                vec![(0, c(2.0, 0.0)), (1, c(0.0, 1.0))],
                vec![(0, c(0.0, -1.0)), (1, c(1.0, 0.0))],
            ],
        )
        .unwrap();
        let x = [c(1.0, 0.0), c(0.0, 2.0)];
        let mut y = [c(0.0, 0.0); 2];
        m.matvec(&x, &mut y);
        assert_eq!(y[0], c(0.0, 0.0));
        assert_eq!(y[1], c(0.0, 1.0));
        let mut y_seq = [c(9.0, 9.0); 2];
        m.matvec_seq(&x, &mut y_seq);
        assert_eq!(y, y_seq);
        assert_eq!(m.hermiticity_defect(), 0.0);
    }

    #[test]
    fn parallel_and_sequential_matvec_agree_bitwise_on_random_input() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let dim = 513;
        let rows: Vec<Vec<(u32, Complex64)>> = (0..dim)
            .map(|_| {
                let mut cols: Vec<u32> = (0..6).map(|_| rng.random_range(0..dim as u32)).collect();
                cols.sort_unstable();
                cols.dedup();
                cols.into_iter()
                    .map(|cix| (cix, c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)))
                    .collect()
            })
            .collect();
        let m = CsrMatrix::from_rows(dim, rows).unwrap();
        let x: Vec<Complex64> = (0..dim)
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let mut y_par = vec![c(0.0, 0.0); dim];
        let mut y_seq = vec![c(0.0, 0.0); dim];
        m.matvec(&x, &mut y_par);
        m.matvec_seq(&x, &mut y_seq);
        assert_eq!(y_par, y_seq);
    }

    #[test]
    fn symmetric_facade_solves_a_known_matrix() {
        let mut a = Mat::<f64>::zeros(2, 2);
        a[(0, 0)] = 2.0;
        a[(0, 1)] = 1.0;
        a[(1, 0)] = 1.0;
        a[(1, 1)] = 2.0;
        let vals = symmetric_eigenvalues(&a).unwrap();
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 3.0, epsilon = 1e-12);
        let (vals2, vecs) = symmetric_eigen(&a).unwrap();
        assert_eq!(vals, vals2);
        // residual of the first eigenpair
        let v0 = (vecs[(0, 0)], vecs[(1, 0)]);
        let r0 = (
            2.0 * v0.0 + v0.1 - vals2[0] * v0.0,
            v0.0 + 2.0 * v0.1 - vals2[0] * v0.1,
        );
        assert!(r0.0.abs() + r0.1.abs() < 1e-12);
    }

    #[test]
    fn hermitian_facade_solves_a_known_matrix() {
        // [[0, i], [-i, 0]] has eigenvalues -1, 1
        let mut a = Mat::<Complex64>::zeros(2, 2);
        a[(0, 1)] = c(0.0, 1.0);
        a[(1, 0)] = c(0.0, -1.0);
        let vals = hermitian_eigenvalues(&a).unwrap();
        assert_abs_diff_eq!(vals[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 1.0, epsilon = 1e-12);
        let (_, vecs) = hermitian_eigen(&a).unwrap();
        // columns must be orthonormal
        let g01 = vecs[(0, 0)].conj() * vecs[(0, 1)] + vecs[(1, 0)].conj() * vecs[(1, 1)];
        assert!(g01.norm() < 1e-12);
    }

    #[test]
    fn vector_kernels_behave() {
        let x = [c(1.0, 1.0), c(0.0, -2.0)];
        let y = [c(2.0, 0.0), c(0.0, 1.0)];
        let d = dot(&x, &y);
        // conj(x).y = (1-i)(2) + (0+2i)(i) = 2 - 2i - 2
        assert_abs_diff_eq!(d.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.im, -2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(norm2(&x), 6.0f64.sqrt(), epsilon = 1e-15);
    }
}
