//! Sparse storage used throughout the crate.
//!
//! [`SymEnvelope`] stores the lower triangle of a symmetric matrix row by row,
//! keeping every entry between the first structurally nonzero column of a row
//! and the diagonal. Cholesky factorization preserves that envelope, so banded
//! precisions and "banded plus a few dense trailing rows" posteriors factor
//! without fill outside the stored profile.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Symmetric matrix in lower row-envelope (skyline) storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEnvelope {
    first: Vec<usize>,
    start: Vec<usize>,
    values: Vec<f64>,
}

impl SymEnvelope {
    /// Zero matrix whose row `i` stores columns `first[i]..=i`.
    pub fn with_profile(first: Vec<usize>) -> Self {
        let mut start = Vec::with_capacity(first.len() + 1);
        let mut offset = 0;
        for (i, &f) in first.iter().enumerate() {
            assert!(f <= i, "envelope row {i} starts after the diagonal");
            start.push(offset);
            offset += i - f + 1;
        }
        start.push(offset);
        SymEnvelope {
            first,
            start,
            values: vec![0.0; offset],
        }
    }

    /// Zero banded matrix with the given half bandwidth.
    pub fn banded(n: usize, half_bandwidth: usize) -> Self {
        Self::with_profile((0..n).map(|i| i.saturating_sub(half_bandwidth)).collect())
    }

    /// Zero matrix whose profile covers every `(i, j)` pair supplied.
    pub fn from_pattern(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut first: Vec<usize> = (0..n).collect();
        for (i, j) in pairs {
            let (r, c) = if i >= j { (i, j) } else { (j, i) };
            if c < first[r] {
                first[r] = c;
            }
        }
        Self::with_profile(first)
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn first_col(&self, i: usize) -> usize {
        self.first[i]
    }

    /// Stored entries of row `i`, columns `first_col(i)..=i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[self.start[i]..self.start[i + 1]]
    }

    fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let (a, b) = (self.start[i], self.start[i + 1]);
        &mut self.values[a..b]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        r < self.dim() && c >= self.first[r]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if c < self.first[r] {
            0.0
        } else {
            self.values[self.start[r] + c - self.first[r]]
        }
    }

    /// Adds `v` to entry `(i, j)` (and implicitly `(j, i)`).
    ///
    /// Panics when the entry lies outside the stored profile.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        assert!(
            c >= self.first[r],
            "entry ({r}, {c}) outside envelope starting at {}",
            self.first[r]
        );
        self.values[self.start[r] + c - self.first[r]] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        assert!(c >= self.first[r], "entry ({r}, {c}) outside envelope");
        self.values[self.start[r] + c - self.first[r]] = v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| *self.row(i).last().unwrap()).collect()
    }

    /// Largest distance between a stored entry and the diagonal.
    pub fn half_bandwidth(&self) -> usize {
        self.first
            .iter()
            .enumerate()
            .map(|(i, &f)| i - f)
            .max()
            .unwrap_or(0)
    }

    /// Number of stored lower-triangle entries, zeros inside the profile included.
    pub fn stored_len(&self) -> usize {
        self.values.len()
    }

    /// Number of stored lower-triangle entries that are nonzero.
    pub fn nonzeros_lower(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            let f = self.first[i];
            for (off, &v) in self.row(i).iter().enumerate() {
                let j = f + off;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(x.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let f = self.first[i];
            let row = self.row(i);
            for (off, &v) in row.iter().enumerate() {
                let j = f + off;
                y[i] += v * x[j];
                if j != i {
                    y[j] += v * x[i];
                }
            }
        }
        y
    }

    /// Lower Cholesky factor `L` with `L Lᵀ = self`.
    pub fn cholesky(&self) -> Result<EnvelopeCholesky> {
        EnvelopeCholesky::factor(self)
    }

    /// Indices whose row is, to relative tolerance `tol`, a combination of the
    /// earlier retained rows.
    ///
    /// Runs the envelope Cholesky in order and deletes row and column `i`
    /// whenever its pivot falls below `tol · A_ii`. The principal submatrix on
    /// the retained indices is then positive definite.
    pub fn dependent_rows(&self, tol: f64) -> Vec<usize> {
        let n = self.dim();
        let mut l = self.clone();
        let mut dropped = vec![false; n];
        for i in 0..n {
            let fi = l.first[i];
            for j in fi..=i {
                if j < i && dropped[j] {
                    l.row_mut(i)[j - fi] = 0.0;
                    continue;
                }
                let fj = l.first[j];
                let k0 = fi.max(fj);
                let mut s = l.row(i)[j - fi];
                if k0 < j {
                    let ri = &l.row(i)[k0 - fi..j - fi];
                    let rj = &l.row(j)[k0 - fj..j - fj];
                    s -= ri.iter().zip(rj).map(|(a, b)| a * b).sum::<f64>();
                }
                if j < i {
                    let ljj = *l.row(j).last().unwrap();
                    l.row_mut(i)[j - fi] = s / ljj;
                } else if s > tol * self.row(i)[i - fi].abs() && s.is_finite() {
                    l.row_mut(i)[i - fi] = s.sqrt();
                } else {
                    dropped[i] = true;
                    l.row_mut(i).iter_mut().for_each(|v| *v = 0.0);
                }
            }
        }
        (0..n).filter(|&i| dropped[i]).collect()
    }
}

/// Cholesky factor stored in the envelope of the matrix it came from.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    l: SymEnvelope,
}

/// Pivots smaller than this fraction of the original diagonal entry are
/// treated as loss of positive definiteness.
const PIVOT_RELATIVE_TOLERANCE: f64 = 1e-14;

impl EnvelopeCholesky {
    pub fn factor(a: &SymEnvelope) -> Result<Self> {
        let n = a.dim();
        let mut l = a.clone();
        for i in 0..n {
            let fi = l.first[i];
            for j in fi..=i {
                let fj = l.first[j];
                let k0 = fi.max(fj);
                let mut s = l.row(i)[j - fi];
                if k0 < j {
                    let ri = &l.row(i)[k0 - fi..j - fi];
                    let rj = &l.row(j)[k0 - fj..j - fj];
                    s -= ri.iter().zip(rj).map(|(a, b)| a * b).sum::<f64>();
                }
                if j < i {
                    let ljj = *l.row(j).last().unwrap();
                    l.row_mut(i)[j - fi] = s / ljj;
                } else {
                    let aii = a.row(i)[i - fi];
                    if !(s > PIVOT_RELATIVE_TOLERANCE * aii.abs()) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite {
                            pivot: i,
                            hint: String::new(),
                        });
                    }
                    l.row_mut(i)[i - fi] = s.sqrt();
                }
            }
        }
        Ok(EnvelopeCholesky { l })
    }

    pub fn dim(&self) -> usize {
        self.l.dim()
    }

    /// The factor `L`; only its lower triangle is meaningful.
    pub fn factor_matrix(&self) -> &SymEnvelope {
        &self.l
    }

    fn diag(&self, i: usize) -> f64 {
        *self.l.row(i).last().unwrap()
    }

    /// Solves `L x = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        for i in 0..self.dim() {
            let f = self.l.first[i];
            let row = self.l.row(i);
            let s: f64 = row[..i - f].iter().zip(&b[f..i]).map(|(a, x)| a * x).sum();
            b[i] = (b[i] - s) / row[i - f];
        }
    }

    /// Solves `Lᵀ x = b` in place.
    pub fn solve_upper_in_place(&self, b: &mut [f64]) {
        for i in (0..self.dim()).rev() {
            let f = self.l.first[i];
            let row = self.l.row(i);
            let xi = b[i] / row[i - f];
            b[i] = xi;
            for (off, &v) in row[..i - f].iter().enumerate() {
                b[f + off] -= v * xi;
            }
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_lower_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        x
    }

    /// `log det A`.
    pub fn log_det(&self) -> f64 {
        (0..self.dim()).map(|i| 2.0 * self.diag(i).ln()).sum()
    }

    /// Entries of `A⁻¹` on the stored envelope (Takahashi recursion).
    ///
    /// Every pair of coordinates that share a row of `A`'s profile is covered,
    /// which includes all marginal variances.
    pub fn selected_inverse(&self) -> SymEnvelope {
        let n = self.dim();
        let mut below: Vec<Vec<usize>> = vec![Vec::new(); n];
        for k in 0..n {
            for j in self.l.first[k]..k {
                below[j].push(k);
            }
        }
        let mut inv = SymEnvelope::with_profile(self.l.first.clone());
        for i in (0..n).rev() {
            let lii = self.diag(i);
            let rows = &below[i];
            let coeffs: Vec<f64> = rows.iter().map(|&k| self.l.get(k, i)).collect();
            for &j in rows.iter().rev() {
                let s: f64 = rows
                    .iter()
                    .zip(&coeffs)
                    .map(|(&k, &lki)| lki * inv.get(k, j))
                    .sum();
                inv.set(j, i, -s / lii);
            }
            let s: f64 = rows
                .iter()
                .zip(&coeffs)
                .map(|(&k, &lki)| lki * inv.get(k, i))
                .sum();
            inv.set(i, i, 1.0 / (lii * lii) - s / lii);
        }
        inv
    }
}

/// Compressed sparse row matrix with sorted, de-duplicated column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn from_rows(ncols: usize, rows: &[Vec<(usize, f64)>]) -> Self {
        let triplets = rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
            .collect();
        Self::from_triplets(rows.len(), ncols, triplets)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Structurally stored entries.
    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.data[a..b])
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|p| vals[p]).unwrap_or(0.0)
    }

    pub fn is_stored(&self, i: usize, j: usize) -> bool {
        self.row(i).0.binary_search(&j).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let triplets = self.iter().map(|(r, c, v)| (c, r, v)).collect();
        CsrMatrix::from_triplets(self.ncols, self.nrows, triplets)
    }

    /// Exact (bitwise) symmetry of values and pattern.
    pub fn is_symmetric(&self) -> bool {
        self.nrows == self.ncols
            && self.iter().all(|(r, c, v)| {
                let (cols, vals) = self.row(c);
                cols.binary_search(&r).map(|p| vals[p] == v).unwrap_or(false)
            })
    }

    /// Entry-wise linear combination `a·self + b·other` over the union pattern.
    pub fn linear_combination(&self, a: f64, other: &CsrMatrix, b: f64) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let triplets = self
            .iter()
            .map(|(r, c, v)| (r, c, a * v))
            .chain(other.iter().map(|(r, c, v)| (r, c, b * v)))
            .collect();
        CsrMatrix::from_triplets(self.nrows, self.ncols, triplets)
    }

    /// Maximum over rows of the distance between a stored entry and the diagonal.
    pub fn half_bandwidth(&self) -> usize {
        self.iter().map(|(r, c, _)| r.abs_diff(c)).max().unwrap_or(0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    /// Copies a square symmetric matrix into envelope storage.
    pub fn to_envelope(&self) -> SymEnvelope {
        assert_eq!(self.nrows, self.ncols);
        let mut env = SymEnvelope::from_pattern(self.nrows, self.iter().map(|(r, c, _)| (r, c)));
        for (r, c, v) in self.iter() {
            if c <= r {
                env.set(r, c, v);
            }
        }
        env
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn spd_banded(n: usize, bw: usize, seed: u64) -> SymEnvelope {
        let mut m = SymEnvelope::banded(n, bw);
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for i in 0..n {
            for j in i.saturating_sub(bw)..i {
                m.set(i, j, next());
            }
            m.set(i, i, 2.0 * bw as f64 + 1.0 + next().abs());
        }
        m
    }

    #[test]
    fn factor_matches_dense() {
        let a = spd_banded(12, 3, 7);
        let chol = a.cholesky().unwrap();
        let dense = a.to_dense();
        let dchol = dense.clone().cholesky().unwrap();
        let b: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
        let x = chol.solve(&b);
        let xd = dchol.solve(&nalgebra::DVector::from_vec(b));
        for i in 0..12 {
            assert_abs_diff_eq!(x[i], xd[i], epsilon = 1e-12);
        }
        assert_abs_diff_eq!(chol.log_det(), dense.determinant().ln(), epsilon = 1e-10);
    }

    #[test]
    fn indefinite_reports_pivot() {
        let mut a = SymEnvelope::banded(3, 1);
        a.set(0, 0, 1.0);
        a.set(1, 0, 2.0);
        a.set(1, 1, 1.0);
        a.set(2, 2, 1.0);
        match a.cholesky() {
            Err(Error::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn dependent_rows_of_gram_matrix() {
        // Gram matrix of vectors v0, v1, v0 + v1, v2.
        let v = [[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [1.0, 2.0, 0.0], [0.5, 0.0, 1.0]];
        let mut a = SymEnvelope::banded(4, 3);
        for i in 0..4 {
            for j in 0..=i {
                a.set(i, j, (0..3).map(|t| v[i][t] * v[j][t]).sum());
            }
        }
        assert_eq!(a.dependent_rows(1e-10), vec![2]);
        assert!(spd_banded(10, 2, 3).dependent_rows(1e-10).is_empty());
    }

    #[test]
    fn arrow_profile_selected_inverse() {
        // banded block followed by two dense trailing rows
        let n = 10;
        let mut first: Vec<usize> = (0..n).map(|i: usize| i.saturating_sub(2)).collect();
        first[8] = 0;
        first[9] = 0;
        let mut a = SymEnvelope::with_profile(first);
        for i in 0..n {
            let f = a.first_col(i);
            for j in f..i {
                a.set(i, j, 0.1 * ((i * 7 + j * 3) % 5) as f64 - 0.2);
            }
            a.set(i, i, 4.0);
        }
        let inv = a.cholesky().unwrap().selected_inverse();
        let dense_inv = a.to_dense().try_inverse().unwrap();
        for i in 0..n {
            for j in a.first_col(i)..=i {
                assert_abs_diff_eq!(inv.get(i, j), dense_inv[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn csr_duplicates_sum_and_transpose() {
        let m = CsrMatrix::from_triplets(2, 3, vec![(0, 2, 1.0), (0, 2, 2.0), (1, 0, -1.0)]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 2), 3.0);
        let t = m.transpose();
        assert_eq!(t.get(2, 0), 3.0);
        assert_eq!(t.get(0, 1), -1.0);
        assert!(!m.is_symmetric());
    }

    proptest! {
        #[test]
        fn solve_inverts_mul(n in 1usize..25, bw in 0usize..5, seed in any::<u64>()) {
            let a = spd_banded(n, bw, seed);
            let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).cos()).collect();
            let x = a.cholesky().unwrap().solve(&b);
            let back = a.mul_vec(&x);
            for i in 0..n {
                prop_assert!((back[i] - b[i]).abs() < 1e-10);
            }
        }
    }
}
