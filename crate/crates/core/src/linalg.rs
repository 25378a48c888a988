//! Small numeric helpers shared by the assembly, solver and verification
//! stages.

use faer::sparse::{SparseColMat, Triplet};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Sparse matrix type used for all global operators.
pub type SparseMatrix = SparseColMat<usize, f64>;

/// Least-squares slope of `log e` against `log h`.
pub fn log_log_slope(h: &[f64], e: &[f64]) -> Result<f64> {
    if h.len() != e.len() || h.len() < 2 {
        return Err(Error::RateFit(format!(
            "need at least two (h, err) pairs, got {} and {}",
            h.len(),
            e.len()
        )));
    }
    if h.iter().chain(e).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::RateFit("mesh sizes and errors must be positive".into()));
    }
    let n = h.len() as f64;
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::RateFit("all mesh sizes are equal".into()));
    }
    Ok(sxy / sxx)
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse together with the 1-norm condition number, or `None` if the LU
/// factorization breaks down.
pub fn inverse_with_condition(m: &DMatrix<f64>) -> Option<(DMatrix<f64>, f64)> {
    let inv = m.clone().lu().try_inverse()?;
    let cond = norm1(m) * norm1(&inv);
    cond.is_finite().then_some((inv, cond))
}

/// Accumulates `(row, col, value)` entries; duplicates are summed on
/// conversion.
#[derive(Clone, Debug, Default)]
pub struct TripletList {
    pub nrows: usize,
    pub ncols: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl TripletList {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if val != 0.0 {
            self.entries.push(Triplet::new(row, col, val));
        }
    }

    /// Adds the dense block `local` at rows `rows` and columns `cols`.
    pub fn add_block(&mut self, rows: &[usize], cols: &[usize], local: &DMatrix<f64>) {
        for (j, &c) in cols.iter().enumerate() {
            for (i, &r) in rows.iter().enumerate() {
                self.push(r, c, local[(i, j)]);
            }
        }
    }

    /// Adds `scale · M` (or its transpose) with its top-left corner at
    /// `(r0, c0)`.
    pub fn add_sparse(&mut self, m: &SparseMatrix, r0: usize, c0: usize, transpose: bool, scale: f64) {
        let cols = m.symbolic().col_ptr();
        let rows = m.symbolic().row_idx();
        for j in 0..m.ncols() {
            for p in cols[j]..cols[j + 1] {
                let (r, c) = if transpose { (j, rows[p]) } else { (rows[p], j) };
                self.push(r0 + r, c0 + c, scale * m.val()[p]);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn build(&self) -> Result<SparseMatrix> {
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &self.entries)
            .map_err(|e| Error::DimensionMismatch(format!("sparse assembly failed: {e:?}")))
    }
}

/// `y = M x`.
pub fn spmv(m: &SparseMatrix, x: &[f64]) -> Vec<f64> {
    assert_eq!(m.ncols(), x.len());
    let mut y = vec![0.0; m.nrows()];
    let cols = m.symbolic().col_ptr();
    let rows = m.symbolic().row_idx();
    let vals = m.val();
    for j in 0..m.ncols() {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        for p in cols[j]..cols[j + 1] {
            y[rows[p]] += vals[p] * xj;
        }
    }
    y
}

/// `y = Mᵀ x`.
pub fn spmv_transpose(m: &SparseMatrix, x: &[f64]) -> Vec<f64> {
    assert_eq!(m.nrows(), x.len());
    let cols = m.symbolic().col_ptr();
    let rows = m.symbolic().row_idx();
    let vals = m.val();
    (0..m.ncols())
        .map(|j| (cols[j]..cols[j + 1]).map(|p| vals[p] * x[rows[p]]).sum())
        .collect()
}

/// Dense copy of a sparse matrix.
pub fn to_dense(m: &SparseMatrix) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    let cols = m.symbolic().col_ptr();
    let rows = m.symbolic().row_idx();
    for j in 0..m.ncols() {
        for p in cols[j]..cols[j + 1] {
            out[(rows[p], j)] += m.val()[p];
        }
    }
    out
}

/// `A + B` for equally shaped matrices.
pub fn sparse_add(a: &SparseMatrix, b: &SparseMatrix) -> Result<SparseMatrix> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch("sparse sum of differently shaped matrices".into()));
    }
    let mut t = TripletList::new(a.nrows(), a.ncols());
    t.add_sparse(a, 0, 0, false, 1.0);
    t.add_sparse(b, 0, 0, false, 1.0);
    t.build()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let h = [0.25f64, 0.125, 0.0625];
        let e: Vec<f64> = h.iter().map(|h| 7.0 * h.powf(2.5)).collect();
        assert!((log_log_slope(&h, &e).unwrap() - 2.5).abs() < 1e-12);
        assert!(log_log_slope(&h[..1], &e[..1]).is_err());
        assert!(log_log_slope(&h, &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn triplets_sum_duplicates_and_matvec() {
        let mut t = TripletList::new(2, 3);
        t.push(0, 0, 1.0);
        t.push(0, 0, 2.0);
        t.push(1, 2, -1.0);
        t.push(0, 1, 4.0);
        let m = t.build().unwrap();
        let d = to_dense(&m);
        assert_eq!(d[(0, 0)], 3.0);
        assert_eq!(spmv(&m, &[1.0, 1.0, 1.0]), vec![7.0, -1.0]);
        assert_eq!(spmv_transpose(&m, &[1.0, 2.0]), vec![3.0, 4.0, -2.0]);
    }

    #[test]
    fn inverse_condition() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let (inv, cond) = inverse_with_condition(&m).unwrap();
        assert_eq!(inv[(1, 1)], 2.0);
        assert!((cond - 4.0).abs() < 1e-14);
        assert!(inverse_with_condition(&DMatrix::zeros(2, 2)).is_none());
    }
}
