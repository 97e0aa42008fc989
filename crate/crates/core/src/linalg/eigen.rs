use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::solve::Cholesky;
use super::sparse::{axpy, dot, norm2, SparseSymMatrix};
use crate::error::{Error, Result};

/// Generalized eigenpair `K x = lambda M x`, with `x^T M x = 1`.
#[derive(Clone, PartialEq)]
pub struct EigenPair {
    pub lambda: f64,
    pub vector: Vec<f64>,
    /// `||K x - lambda M x|| / (lambda ||M x||)` in the Euclidean norm.
    pub residual: f64,
}

impl std::fmt::Debug for EigenPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EigenPair")
            .field("lambda", &self.lambda)
            .field("residual", &self.residual)
            .field("len", &self.vector.len())
            .finish()
    }
}

/// Controls for [`smallest_eigenpairs_with`].
#[derive(Clone, Debug)]
pub struct EigenOptions {
    pub tol: f64,
    /// Number of thick restarts before giving up.
    pub max_restarts: usize,
    pub seed: u64,
    pub block_size: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_restarts: 200, seed: 20_240_611, block_size: 4 }
    }
}

/// Ascending eigen-decomposition of a small dense symmetric matrix given row-major.
pub fn dense_symmetric_eigen(h: &[f64], m: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mat = Mat::<f64>::from_fn(m, m, |i, j| 0.5 * (h[i * m + j] + h[j * m + i]));
    let evd = mat
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Breakdown(format!("dense eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let vals: Vec<f64> = (0..m).map(|i| s[i]).collect();
    let vecs: Vec<Vec<f64>> = (0..m).map(|c| (0..m).map(|r| u[(r, c)]).collect()).collect();
    Ok((vals, vecs))
}

/// The `count` smallest eigenpairs of the pencil `(K, M)` with default options.
pub fn smallest_eigenpairs(k: &SparseSymMatrix, m: &SparseSymMatrix, count: usize, tol: f64) -> Result<Vec<EigenPair>> {
    let opts = EigenOptions { tol, ..EigenOptions::default() };
    smallest_eigenpairs_with(k, m, count, &opts)
}

struct Basis<'a> {
    m: &'a SparseSymMatrix,
    vecs: Vec<Vec<f64>>,
}

impl Basis<'_> {
    /// M-orthogonalizes `w` against the basis with two Gram-Schmidt passes.
    /// Returns the accumulated coefficients and, when `w` keeps a meaningful
    /// norm, appends the normalized remainder and returns that norm too.
    fn push(&mut self, mut w: Vec<f64>) -> (Vec<f64>, Option<f64>) {
        let mut coef = vec![0.0; self.vecs.len()];
        let mut mw = self.m.matvec(&w);
        let start = dot(&w, &mw).max(0.0).sqrt();
        if start == 0.0 || !start.is_finite() {
            return (coef, None);
        }
        for _ in 0..2 {
            let c: Vec<f64> = self.vecs.iter().map(|v| dot(v, &mw)).collect();
            for ((v, ci), acc) in self.vecs.iter().zip(&c).zip(coef.iter_mut()) {
                axpy(-ci, v, &mut w);
                *acc += ci;
            }
            mw = self.m.matvec(&w);
        }
        let nrm = dot(&w, &mw).max(0.0).sqrt();
        if nrm <= 1e-10 * start {
            return (coef, None);
        }
        w.iter_mut().for_each(|x| *x /= nrm);
        self.vecs.push(w);
        (coef, Some(nrm))
    }
}

/// `K^{-1} M`, applied blockwise.
struct ShiftInvert<'a> {
    chol: Cholesky,
    m: &'a SparseSymMatrix,
}

impl ShiftInvert<'_> {
    fn apply(&self, xs: &[&Vec<f64>]) -> Vec<Vec<f64>> {
        let rhs: Vec<Vec<f64>> = xs.iter().map(|x| self.m.matvec(x)).collect();
        self.chol.solve_many(&rhs)
    }

    /// Random vector smoothed by two applications of the operator, so that
    /// every basis vector lies in the range of `K^{-1}`.
    fn smooth_random(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let r: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let once = self.apply(&[&r]).pop().unwrap();
        self.apply(&[&once]).pop().unwrap()
    }
}

/// Symmetric projected operator stored densely, grown with the basis.
struct Projection {
    cap: usize,
    t: Vec<f64>,
}

impl Projection {
    fn new(cap: usize) -> Self {
        Self { cap, t: vec![0.0; cap * cap] }
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.t[i * self.cap + j] = v;
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.cap + j]
    }

    /// Leading `a x a` block, symmetrized, row-major.
    fn leading(&self, a: usize) -> Vec<f64> {
        let mut out = vec![0.0; a * a];
        for i in 0..a {
            for j in 0..a {
                out[i * a + j] = 0.5 * (self.get(i, j) + self.get(j, i));
            }
        }
        out
    }
}

/// Shift-invert block Lanczos with thick restarts.
///
/// The Krylov space of `K^{-1} M` is built with full M-orthogonalization and
/// the projected operator `T = V^T M K^{-1} M V` is recorded from the
/// orthogonalization coefficients. Ritz values `theta` of `T` give
/// `lambda = 1/theta`; reported eigenvalues are Rayleigh quotients of the
/// Ritz vectors. A restart keeps the leading Ritz vectors and the current
/// residual block, which preserves the Krylov relation.
pub fn smallest_eigenpairs_with(
    k: &SparseSymMatrix,
    m: &SparseSymMatrix,
    count: usize,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair>> {
    let n = k.dim();
    if m.dim() != n {
        return Err(Error::InvalidInput("stiffness and mass sizes differ".into()));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    if count > n {
        return Err(Error::InvalidInput(format!("requested {count} eigenpairs of a {n}-dimensional pencil")));
    }
    let op = ShiftInvert { chol: Cholesky::factor(k)?, m };
    let k_norm = inf_norm(k);
    let m_norm = inf_norm(m);
    let p = opts.block_size.max(1).min(n);
    let keep = (count + p).min(n);
    let m_max = (2 * count + 2 * p).max(count + 4 * p).min(n);
    let cap = m_max + 2 * p;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut basis = Basis { m, vecs: Vec::with_capacity(cap) };
    let mut proj = Projection::new(cap);
    let mut tries = 0;
    while basis.vecs.len() < p && tries < 10 * p {
        basis.push(op.smooth_random(&mut rng, n));
        tries += 1;
    }
    let mut frontier: Vec<usize> = (0..basis.vecs.len()).collect();
    let mut last_pairs = Vec::new();
    let mut worst = f64::INFINITY;

    for restart in 0..=opts.max_restarts {
        // Extend until the basis minus its frontier block fills the active size.
        loop {
            let active = basis.vecs.len() - frontier.len();
            if active >= m_max || frontier.is_empty() {
                break;
            }
            let images = op.apply(&frontier.iter().map(|&i| &basis.vecs[i]).collect::<Vec<_>>());
            let mut next = Vec::new();
            for (&src, w) in frontier.iter().zip(images) {
                let (coef, beta) = basis.push(w);
                for (row, c) in coef.iter().enumerate() {
                    proj.set(row, src, *c);
                }
                match beta {
                    Some(b) => {
                        proj.set(basis.vecs.len() - 1, src, b);
                        next.push(basis.vecs.len() - 1);
                    }
                    None => {
                        // invariant subspace found; continue from a fresh direction
                        let mut guard = 0;
                        while guard < 5 && basis.vecs.len() < n.min(cap) {
                            guard += 1;
                            if basis.push(op.smooth_random(&mut rng, n)).1.is_some() {
                                next.push(basis.vecs.len() - 1);
                                break;
                            }
                        }
                    }
                }
            }
            frontier = next;
        }

        let active = basis.vecs.len() - frontier.len();
        let (theta, svecs) = dense_symmetric_eigen(&proj.leading(active), active)?;
        // largest theta first
        let order: Vec<usize> = (0..active).rev().collect();
        let take = keep.min(active);
        let mut ritz: Vec<Vec<f64>> = Vec::with_capacity(take);
        for &c in order.iter().take(take) {
            let mut x = vec![0.0; n];
            for (v, s) in basis.vecs.iter().take(active).zip(&svecs[c]) {
                axpy(*s, v, &mut x);
            }
            ritz.push(x);
        }
        let mut pairs = polish(k, m, &op, &ritz, count)?;
        worst = pairs.iter().map(|p| p.residual).fold(0.0, f64::max);
        let accepted = pairs.iter().all(|p| p.residual <= opts.tol.max(rounding_floor(p, k_norm, m_norm, m)));
        if accepted || active == n {
            if worst > opts.tol {
                log::warn!("eigen residual {worst:.2e} above tolerance {:.1e} but at the rounding floor", opts.tol);
            }
            for pair in pairs.iter_mut() {
                normalize_pair(pair, m);
            }
            log::debug!("eigensolver converged after {restart} restarts, worst residual {worst:.2e}");
            return Ok(pairs);
        }
        last_pairs = pairs;

        // Thick restart: [Ritz vectors | residual block] with arrowhead projection.
        let front_vecs: Vec<Vec<f64>> = frontier.iter().map(|&i| basis.vecs[i].clone()).collect();
        let mut new_proj = Projection::new(cap);
        for (i, &c) in order.iter().take(take).enumerate() {
            new_proj.set(i, i, theta[c]);
            for (r, &fi) in frontier.iter().enumerate() {
                let coupling: f64 = (0..active).map(|j| proj.get(fi, j) * svecs[c][j]).sum();
                new_proj.set(take + r, i, coupling);
                new_proj.set(i, take + r, coupling);
            }
        }
        basis.vecs = ritz;
        basis.vecs.extend(front_vecs);
        proj = new_proj;
        frontier = (take..basis.vecs.len()).collect();
        if frontier.is_empty() {
            if basis.push(op.smooth_random(&mut rng, n)).1.is_some() {
                frontier.push(basis.vecs.len() - 1);
            }
        }
    }
    Err(Error::EigenNotConverged { restarts: opts.max_restarts, worst_residual: worst, partial: last_pairs })
}

fn inf_norm(a: &SparseSymMatrix) -> f64 {
    (0..a.dim()).map(|r| a.row(r).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Smallest residual that floating-point evaluation of `K x - lambda M x` can
/// resolve for this pair.
fn rounding_floor(p: &EigenPair, k_norm: f64, m_norm: f64, m: &SparseSymMatrix) -> f64 {
    let xn = p.vector.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mxn = norm2(&m.matvec(&p.vector));
    let scale = (k_norm + p.lambda.abs() * m_norm) * xn * (p.vector.len() as f64).sqrt();
    64.0 * f64::EPSILON * scale / (p.lambda.abs() * mxn).max(f64::MIN_POSITIVE)
}

/// One inverse-iteration step on the Ritz vectors followed by Rayleigh-Ritz
/// in their span.
///
/// Gram-Schmidt leaves rounding noise in every frequency, and the stiffness
/// residual amplifies high-frequency noise by up to `lambda_max / lambda`.
/// Applying `K^{-1} M` once damps that noise before residuals are measured.
fn polish(
    k: &SparseSymMatrix,
    m: &SparseSymMatrix,
    op: &ShiftInvert<'_>,
    ritz: &[Vec<f64>],
    count: usize,
) -> Result<Vec<EigenPair>> {
    let images = op.apply(&ritz.iter().collect::<Vec<_>>());
    let mut basis = Basis { m, vecs: Vec::with_capacity(images.len()) };
    for z in images {
        basis.push(z);
    }
    let dim = basis.vecs.len();
    let kz: Vec<Vec<f64>> = basis.vecs.iter().map(|z| k.matvec(z)).collect();
    let mut h = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let v = dot(&basis.vecs[j], &kz[i]);
            h[i * dim + j] = v;
            h[j * dim + i] = v;
        }
    }
    let (vals, svecs) = dense_symmetric_eigen(&h, dim)?;
    let n = k.dim();
    let mut pairs = Vec::with_capacity(count);
    for c in 0..count.min(dim) {
        let mut x = vec![0.0; n];
        let mut kx = vec![0.0; n];
        for ((v, kv), s) in basis.vecs.iter().zip(&kz).zip(&svecs[c]) {
            axpy(*s, v, &mut x);
            axpy(*s, kv, &mut kx);
        }
        let mx = m.matvec(&x);
        let lam = vals[c];
        let r: Vec<f64> = kx.iter().zip(&mx).map(|(a, b)| a - lam * b).collect();
        let denom = lam.abs() * norm2(&mx);
        let residual = if denom > 0.0 { norm2(&r) / denom } else { norm2(&r) };
        pairs.push(EigenPair { lambda: lam, vector: x, residual });
    }
    Ok(pairs)
}

/// Rescales to unit M-norm and fixes the sign so the largest entry is positive.
fn normalize_pair(pair: &mut EigenPair, m: &SparseSymMatrix) {
    let nrm = m.inner(&pair.vector, &pair.vector).sqrt();
    let mut imax = 0;
    for (i, v) in pair.vector.iter().enumerate() {
        if v.abs() > pair.vector[imax].abs() + 1e-12 {
            imax = i;
        }
    }
    let s = if pair.vector[imax] < 0.0 { -1.0 / nrm } else { 1.0 / nrm };
    pair.vector.iter_mut().for_each(|x| *x *= s);
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
    fn identity_pencil() {
        let i = SparseSymMatrix::identity(12);
        let pairs = smallest_eigenpairs(&i, &i, 3, 1e-10).unwrap();
        assert_eq!(pairs.len(), 3);
        for p in &pairs {
            assert!((p.lambda - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tridiagonal_closed_form() {
        let n = 200;
        let k = lap1d(n);
        let m = SparseSymMatrix::identity(n);
        let pairs = smallest_eigenpairs(&k, &m, 6, 1e-10).unwrap();
        for (j, p) in pairs.iter().enumerate() {
            let theta = (j + 1) as f64 * std::f64::consts::PI / (n + 1) as f64;
            let exact = 2.0 - 2.0 * theta.cos();
            assert!((p.lambda - exact).abs() <= 1e-9 * exact, "{j}: {} vs {exact}", p.lambda);
            assert!(p.residual <= 1e-10);
        }
        for a in 0..pairs.len() {
            for b in 0..pairs.len() {
                let ip = dot(&pairs[a].vector, &pairs[b].vector);
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn restarts_reach_rounding_floor() {
        let n = 3000;
        let k = lap1d(n);
        let m = SparseSymMatrix::identity(n);
        let opts = EigenOptions { tol: 1e-10, block_size: 2, ..EigenOptions::default() };
        let pairs = smallest_eigenpairs_with(&k, &m, 20, &opts).unwrap();
        for (j, p) in pairs.iter().enumerate() {
            let theta = (j + 1) as f64 * std::f64::consts::PI / (n + 1) as f64;
            let exact = 2.0 - 2.0 * theta.cos();
            assert!((p.lambda - exact).abs() <= 1e-9 * exact, "{j}: {} vs {exact}", p.lambda);
        }
    }

    #[test]
    fn too_many_requested() {
        let i = SparseSymMatrix::identity(3);
        assert!(smallest_eigenpairs(&i, &i, 4, 1e-9).is_err());
    }

    #[test]
    fn budget_exhaustion_reports_partial() {
        let n = 400;
        let k = lap1d(n);
        let m = SparseSymMatrix::identity(n);
        let opts = EigenOptions { tol: 1e-15, max_restarts: 0, block_size: 1, ..EigenOptions::default() };
        match smallest_eigenpairs_with(&k, &m, 10, &opts) {
            Err(Error::EigenNotConverged { partial, .. }) => assert_eq!(partial.len(), 10),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn dense_eigen_small() {
        let (v, u) = dense_symmetric_eigen(&[2.0, 1.0, 1.0, 2.0], 2).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-14 && (v[1] - 3.0).abs() < 1e-14);
        assert!((u[0][0].abs() - 0.5f64.sqrt()).abs() < 1e-14);
    }
}
