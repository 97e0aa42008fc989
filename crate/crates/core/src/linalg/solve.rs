use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::{Mat, Side};

use super::sparse::{axpy, dot, norm2, SparseSymMatrix};
use crate::error::{Error, Result};

/// Sparse Cholesky factorization `K = L L^T` of a positive definite matrix.
pub struct Cholesky {
    llt: Llt<usize, f64>,
    n: usize,
}

impl std::fmt::Debug for Cholesky {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Cholesky").field("n", &self.n).finish()
    }
}

impl Cholesky {
    pub fn factor(k: &SparseSymMatrix) -> Result<Self> {
        if k.dim() == 0 {
            return Err(Error::InvalidInput("cannot factor an empty matrix".into()));
        }
        let lower = k.to_faer_lower()?;
        let llt = lower
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Breakdown(format!("Cholesky factorization failed: {e:?}")))?;
        Ok(Self { llt, n: k.dim() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.llt.solve_in_place(rhs.as_mut());
        (0..self.n).map(|i| rhs[(i, 0)]).collect()
    }

    /// Solves for several right-hand sides at once.
    pub fn solve_many(&self, bs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        if bs.is_empty() {
            return Vec::new();
        }
        let mut rhs = Mat::<f64>::from_fn(self.n, bs.len(), |i, j| bs[j][i]);
        self.llt.solve_in_place(rhs.as_mut());
        (0..bs.len()).map(|j| (0..self.n).map(|i| rhs[(i, j)]).collect()).collect()
    }
}

fn relative_residual(k: &SparseSymMatrix, x: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
    let mut r = k.matvec(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let bn = norm2(b);
    let rel = if bn == 0.0 { norm2(&r) } else { norm2(&r) / bn };
    (r, rel)
}

/// Direct solve of `K x = b` with up to three steps of iterative refinement.
///
/// For a semidefinite `K` whose kernel is spanned by constants, pass `pin`;
/// that dof is fixed to zero and `b` must be orthogonal to the kernel.
/// The residual is always measured against the full system.
pub fn factor_solve(k: &SparseSymMatrix, b: &[f64], tol: f64, pin: Option<usize>) -> Result<Vec<f64>> {
    let n = k.dim();
    if b.len() != n {
        return Err(Error::InvalidInput(format!("right side has length {}, matrix is {n}x{n}", b.len())));
    }
    if b.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; n]);
    }
    let keep: Vec<usize> = match pin {
        Some(p) if p >= n => return Err(Error::InvalidInput(format!("pinned dof {p} out of range"))),
        Some(p) => (0..n).filter(|&i| i != p).collect(),
        None => (0..n).collect(),
    };
    let reduced = if pin.is_some() { k.restrict(&keep) } else { k.clone() };
    let chol = Cholesky::factor(&reduced)?;
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut rel = f64::INFINITY;
    for _ in 0..4 {
        let rr: Vec<f64> = keep.iter().map(|&i| r[i]).collect();
        let dx = chol.solve(&rr);
        for (j, &i) in keep.iter().enumerate() {
            x[i] += dx[j];
        }
        let (res, new_rel) = relative_residual(k, &x, b);
        r = res;
        if new_rel <= tol || new_rel >= 0.5 * rel {
            rel = new_rel;
            break;
        }
        rel = new_rel;
    }
    if !rel.is_finite() || rel > tol {
        return Err(Error::NotConverged { iterations: 4, residual: rel });
    }
    Ok(x)
}

/// Outcome of [`conjugate_gradient`].
#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients.
///
/// Reports [`Error::Breakdown`] when a search direction has non-positive
/// curvature, which happens for indefinite input.
pub fn conjugate_gradient(k: &SparseSymMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<CgOutcome> {
    let n = k.dim();
    if b.len() != n {
        return Err(Error::InvalidInput(format!("right side has length {}, matrix is {n}x{n}", b.len())));
    }
    let bn = norm2(b);
    if bn == 0.0 {
        return Ok(CgOutcome { x: vec![0.0; n], iterations: 0, relative_residual: 0.0 });
    }
    let diag = k.diagonal();
    if diag.iter().any(|&d| d <= 0.0) {
        return Err(Error::Breakdown("non-positive diagonal entry".into()));
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut kp = vec![0.0; n];
    for it in 1..=max_iter {
        k.matvec_into(&p, &mut kp);
        let curv = dot(&p, &kp);
        if curv <= 0.0 || !curv.is_finite() {
            return Err(Error::Breakdown(format!("non-positive curvature {curv:.3e} at iteration {it}")));
        }
        let alpha = rz / curv;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &kp, &mut r);
        let rel = norm2(&r) / bn;
        if rel <= tol {
            return Ok(CgOutcome { x, iterations: it, relative_residual: rel });
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged { iterations: max_iter, residual: norm2(&r) / bn })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lap1d(n: usize) -> SparseSymMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SparseSymMatrix::from_triplets(n, &t).unwrap()
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let b = vec![1.5, -2.0, 3.25];
        let x = factor_solve(&SparseSymMatrix::identity(3), &b, 1e-12, None).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn tridiagonal_first_column_matches_dense_inverse() {
        // inverse of tridiag(-1,2,-1) of size 4 has entries min(i,j)(5-max(i,j))/5, 1-based
        let x = factor_solve(&lap1d(4), &[1.0, 0.0, 0.0, 0.0], 1e-13, None).unwrap();
        let expect = [4.0 / 5.0, 3.0 / 5.0, 2.0 / 5.0, 1.0 / 5.0];
        for (a, b) in x.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn pinned_singular_solve() {
        // periodic ring Laplacian: kernel = constants
        let n = 6;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            t.push((i, (i + 1) % n, -1.0));
            t.push(((i + 1) % n, i, -1.0));
        }
        let k = SparseSymMatrix::from_triplets(n, &t).unwrap();
        let b = vec![1.0, -1.0, 2.0, 0.0, -3.0, 1.0];
        let x = factor_solve(&k, &b, 1e-12, Some(0)).unwrap();
        assert_eq!(x[0], 0.0);
        let r: f64 = k.matvec(&x).iter().zip(&b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(r <= 1e-12 * norm2(&b));
    }

    #[test]
    fn indefinite_input_breaks_down() {
        let k = SparseSymMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, -1.0)]).unwrap();
        assert!(matches!(factor_solve(&k, &[1.0, 1.0], 1e-10, None), Err(Error::Breakdown(_))));
        let k = SparseSymMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]).unwrap();
        assert!(matches!(conjugate_gradient(&k, &[1.0, -1.0], 1e-10, 10), Err(Error::Breakdown(_))));
    }

    #[test]
    fn cg_agrees_with_direct() {
        let k = lap1d(50);
        let b: Vec<f64> = (0..50).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let xd = factor_solve(&k, &b, 1e-12, None).unwrap();
        let xc = conjugate_gradient(&k, &b, 1e-12, 500).unwrap();
        for (a, c) in xd.iter().zip(&xc.x) {
            assert!((a - c).abs() < 1e-8);
        }
    }

    #[test]
    fn multi_rhs_matches_single() {
        let k = lap1d(10);
        let chol = Cholesky::factor(&k).unwrap();
        let bs = vec![vec![1.0; 10], (0..10).map(|i| i as f64).collect::<Vec<_>>()];
        let many = chol.solve_many(&bs);
        for (b, x) in bs.iter().zip(&many) {
            let single = chol.solve(b);
            assert_eq!(&single, x);
        }
    }
}
