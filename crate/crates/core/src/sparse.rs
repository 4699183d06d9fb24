//! Compressed sparse row matrices and thin wrappers around the direct
//! factorizations of `faer`.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Row-compressed matrix with sorted, duplicate-free column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    pub rows: usize,
    pub cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, row_ptr: vec![0; rows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    /// Duplicate entries are summed; the summation order is the sorted
    /// order of the triplets, so the result does not depend on the order in
    /// which they were pushed.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        for &(i, j, _) in &triplets {
            assert!(i < rows && j < cols, "triplet ({i}, {j}) outside {rows}x{cols}");
        }
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { rows, cols, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `A^T x`.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "matvec_t dimension mismatch");
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                y[j] += v * x[i];
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.cols, self.rows, self.triplets().map(|(i, j, v)| (j, i, v)).collect())
    }

    pub fn matmul(&self, other: &SparseOperator) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut acc = vec![0.0; other.cols];
        let mut marked = vec![false; other.cols];
        let mut touched = Vec::new();
        let mut triplets = Vec::new();
        for i in 0..self.rows {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if !marked[j] {
                        marked[j] = true;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                triplets.push((i, j, acc[j]));
                acc[j] = 0.0;
                marked[j] = false;
            }
            touched.clear();
        }
        Self::from_triplets(self.rows, other.cols, triplets)
    }

    /// `T^T A T`.
    pub fn congruence(&self, t: &SparseOperator) -> Self {
        t.transpose().matmul(&self.matmul(t))
    }

    pub fn scaled_add(&self, other: &SparseOperator, s: f64) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut t: Vec<_> = self.triplets().collect();
        t.extend(other.triplets().map(|(i, j, v)| (i, j, s * v)));
        Self::from_triplets(self.rows, self.cols, t)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - A^T| / max |A|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for (i, j, v) in self.triplets() {
            worst = worst.max((v - self.get(j, i)).abs());
        }
        worst / scale
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.rows, self.cols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn to_faer(&self) -> SparseColMat<usize, f64> {
        let t: Vec<Triplet<usize, usize, f64>> = self.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.rows, self.cols, &t).expect("entries are deduplicated")
    }

    /// Select the given columns, in order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.cols];
        for (new, &old) in cols.iter().enumerate() {
            map[old] = new;
        }
        let t = self.triplets().filter(|&(_, j, _)| map[j] != usize::MAX).map(|(i, j, v)| (i, map[j], v)).collect();
        Self::from_triplets(self.rows, cols.len(), t)
    }
}

fn column(x: &[f64]) -> Mat<f64> {
    Mat::from_fn(x.len(), 1, |i, _| x[i])
}

fn to_vec(m: &Mat<f64>) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

/// Sparse Cholesky factorization of a symmetric positive definite matrix.
pub struct Cholesky {
    n: usize,
    llt: Llt<usize, f64>,
}

impl std::fmt::Debug for Cholesky {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Cholesky({}x{})", self.n, self.n)
    }
}

impl Cholesky {
    pub fn new(a: &SparseOperator) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::Factorization(format!("matrix is {}x{}", a.rows, a.cols)));
        }
        let llt = a
            .to_faer()
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Factorization(format!("Cholesky: {e:?}")))?;
        Ok(Self { n: a.rows, llt })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        to_vec(&self.llt.solve(&column(b)))
    }
}

/// Sparse LU factorization for indefinite systems.
pub struct SparseLu {
    n: usize,
    lu: Lu<usize, f64>,
}

impl SparseLu {
    pub fn new(a: &SparseOperator) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::Factorization(format!("matrix is {}x{}", a.rows, a.cols)));
        }
        let lu = a.to_faer().sp_lu().map_err(|e| Error::Factorization(format!("LU: {e:?}")))?;
        Ok(Self { n: a.rows, lu })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(b.len(), self.n);
        let x = to_vec(&self.lu.solve(&column(b)));
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Factorization("LU solve produced non-finite values (singular matrix)".into()));
        }
        Ok(x)
    }
}

/// Numerical rank by singular values of the column-normalized matrix.
/// Columns at roundoff level relative to the largest are treated as zero.
pub fn numerical_rank(m: &Mat<f64>, rel_tol: f64) -> usize {
    let ncols = m.ncols();
    let norms: Vec<f64> = (0..ncols).map(|j| (0..m.nrows()).map(|i| m[(i, j)] * m[(i, j)]).sum::<f64>().sqrt()).collect();
    let largest = norms.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..ncols).filter(|&j| norms[j] > 1e-12 * largest).collect();
    if keep.is_empty() || m.nrows() == 0 {
        return 0;
    }
    let scaled = Mat::from_fn(m.nrows(), keep.len(), |i, k| m[(i, keep[k])] / norms[keep[k]]);
    let sv = scaled.singular_values().expect("SVD did not converge");
    let smax = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Eigenvalues of a dense symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &Mat<f64>) -> Vec<f64> {
    let mut ev = m.self_adjoint_eigenvalues(Side::Lower).expect("eigen decomposition did not converge");
    ev.sort_by(f64::total_cmp);
    ev
}

/// Solve a small dense system `A x = b` with full pivoting.
pub fn dense_solve(a: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    a.full_piv_lu().solve(b)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> SparseOperator {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SparseOperator::from_triplets(n, n, t)
    }

    #[test]
    fn duplicates_are_summed() {
        let a = SparseOperator::from_triplets(2, 2, vec![(1, 0, 1.0), (0, 1, 2.0), (1, 0, 3.0)]);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(1, 0), 4.0);
        assert_eq!(a.get(0, 0), 0.0);
    }

    #[test]
    fn products_match_dense() {
        let a = SparseOperator::from_triplets(2, 3, vec![(0, 0, 1.0), (0, 2, 2.0), (1, 1, -1.0)]);
        let b = SparseOperator::from_triplets(3, 2, vec![(0, 1, 1.0), (1, 0, 5.0), (2, 0, 3.0)]);
        let c = a.matmul(&b).to_dense();
        let d = a.to_dense() * b.to_dense();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(c[(i, j)], d[(i, j)]);
            }
        }
        assert_eq!(a.transpose().transpose(), a);
        assert_eq!(a.matvec_t(&[1.0, 2.0]), a.transpose().matvec(&[1.0, 2.0]));
    }

    #[test]
    fn cholesky_and_lu_solve() {
        let a = tridiag(6);
        let x: Vec<f64> = (0..6).map(|i| i as f64 - 2.0).collect();
        let b = a.matvec(&x);
        let y = Cholesky::new(&a).unwrap().solve(&b);
        let z = SparseLu::new(&a).unwrap().solve(&b).unwrap();
        for i in 0..6 {
            assert!((y[i] - x[i]).abs() < 1e-13);
            assert!((z[i] - x[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn indefinite_matrix_fails_cholesky() {
        let a = SparseOperator::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(Cholesky::new(&a).is_err());
    }

    #[test]
    fn rank_of_dependent_columns() {
        let m = Mat::from_fn(4, 3, |i, j| if j < 2 { (i + j) as f64 } else { (2 * i + 1) as f64 });
        assert_eq!(numerical_rank(&m, 1e-10), 2);
    }
}
