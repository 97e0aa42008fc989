use crate::error::{Error, Result};

/// Square sparse matrix in compressed row storage holding both triangles.
///
/// Column indices are sorted and unique within each row. Assembly routines in
/// this crate produce exactly symmetric values; `symmetric` records that the
/// caller may rely on it.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseSymMatrix {
    /// Wraps raw CSR arrays after validating their shape.
    pub fn from_csr(n: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if row_ptr.len() != n + 1 || col_idx.len() != values.len() || row_ptr[n] != col_idx.len() {
            return Err(Error::InvalidInput("inconsistent CSR arrays".into()));
        }
        for r in 0..n {
            let (s, e) = (row_ptr[r], row_ptr[r + 1]);
            if s > e {
                return Err(Error::InvalidInput(format!("row pointer decreases at row {r}")));
            }
            let cols = &col_idx[s..e];
            if cols.iter().any(|&c| c >= n) || cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidInput(format!("row {r}: columns out of range or unsorted")));
            }
        }
        let mut m = Self { n, row_ptr, col_idx, values, symmetric: false };
        m.symmetric = m.symmetry_defect() == 0.0;
        Ok(m)
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed in input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        for &(r, c, _) in triplets {
            if r >= n || c >= n {
                return Err(Error::InvalidInput(format!("triplet ({r},{c}) outside {n}x{n}")));
            }
        }
        order.sort_by_key(|&t| (triplets[t].0, triplets[t].1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for &t in &order {
            let (r, c, v) = triplets[t];
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self::from_csr(n, row_ptr, col_idx, values)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
            symmetric: true,
        }
    }

    /// Zero-valued matrix with a prescribed sorted pattern. Used by assembly.
    pub(crate) fn with_pattern(n: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>) -> Self {
        let nnz = col_idx.len();
        Self { n, row_ptr, col_idx, values: vec![0.0; nnz], symmetric: true }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(column, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[s..e].iter().copied().zip(self.values[s..e].iter().copied())
    }

    #[inline]
    pub(crate) fn position(&self, r: usize, c: usize) -> Option<usize> {
        let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[s..e].binary_search(&c).ok().map(|p| s + p)
    }

    #[inline]
    pub(crate) fn add_at(&mut self, r: usize, c: usize, v: f64) {
        let p = self.position(r, c).expect("entry outside assembled pattern");
        self.values[p] += v;
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.position(r, c).map_or(0.0, |p| self.values[p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for r in 0..self.n {
            let mut s = 0.0;
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[p] * x[self.col_idx[p]];
            }
            y[r] = s;
        }
    }

    /// `x^T A y`.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.matvec(y);
        dot(x, &ay)
    }

    /// Sum of all stored entries.
    pub fn total_sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `max |a_ij - a_ji|` over the stored pattern; a missing mirror entry counts as zero.
    pub fn symmetry_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                d = d.max((v - self.get(c, r)).abs());
            }
        }
        d
    }

    /// Principal submatrix on the sorted index set `keep`.
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut row_ptr = Vec::with_capacity(keep.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for &old in keep {
            for (c, v) in self.row(old) {
                if map[c] != usize::MAX {
                    col_idx.push(map[c]);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { n: keep.len(), row_ptr, col_idx, values, symmetric: self.symmetric }
    }

    /// Returns a copy scaled by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Lower triangle as a faer column-major matrix (used by the Cholesky path).
    pub(crate) fn to_faer_lower(&self) -> Result<faer::sparse::SparseColMat<usize, f64>> {
        use faer::sparse::{SparseColMat, Triplet};
        let mut trip = Vec::with_capacity(self.nnz() / 2 + self.n);
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                if c <= r {
                    trip.push(Triplet::new(r, c, v));
                }
            }
        }
        SparseColMat::try_new_from_triplets(self.n, self.n, &trip)
            .map_err(|e| Error::InvalidInput(format!("sparse conversion failed: {e:?}")))
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let m = SparseSymMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, 0.5), (0, 1, 0.5)]).unwrap();
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert!(m.is_symmetric());
        assert_eq!(m.matvec(&[1.0, 2.0]), vec![4.0, 0.5]);
    }

    #[test]
    fn rejects_unsorted_rows() {
        assert!(SparseSymMatrix::from_csr(2, vec![0, 2, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn restrict_keeps_principal_block() {
        let m = SparseSymMatrix::from_triplets(
            3,
            &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0), (1, 2, -1.0), (2, 1, -1.0), (2, 2, 2.0)],
        )
        .unwrap();
        let r = m.restrict(&[0, 2]);
        assert_eq!(r.dim(), 2);
        assert_eq!(r.get(0, 0), 2.0);
        assert_eq!(r.get(0, 1), 0.0);
        assert_eq!(r.nnz(), 2);
    }

    #[test]
    fn asymmetric_values_detected() {
        let m = SparseSymMatrix::from_triplets(2, &[(0, 1, 1.0), (1, 0, 2.0)]).unwrap();
        assert!(!m.is_symmetric());
        assert_eq!(m.symmetry_defect(), 1.0);
    }
}
