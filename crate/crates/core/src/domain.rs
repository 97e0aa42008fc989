//! Dirichlet problems on the unit square: source solves, Dirichlet correctors,
//! corrector-based approximation errors, spectra and cluster projections.

use crate::coefficient::{CoefficientField, Tensor, MAX_DIM};
use crate::error::{Error, Result};
use crate::linalg::{factor_solve, smallest_eigenpairs_with, EigenOptions, EigenPair, SparseSymMatrix};
use crate::mesh::{
    assemble_mass, assemble_stiffness_constant_full, assemble_stiffness_domain_full, shape_values, DomainGrid,
    Quadrature,
};

/// Which elliptic operator to discretize.
#[derive(Clone, Debug)]
pub enum Operator {
    /// `-div(A(x/eps) grad)`.
    Oscillating { field: CoefficientField, eps: f64 },
    /// `-div(A_hat grad)` with a constant tensor.
    Homogenized(Tensor),
}

impl Operator {
    pub fn label(&self) -> &'static str {
        match self {
            Operator::Oscillating { .. } => "oscillating",
            Operator::Homogenized(_) => "homogenized",
        }
    }

    /// `eps` for the oscillating operator, `0` for the homogenized one.
    pub fn eps(&self) -> f64 {
        match self {
            Operator::Oscillating { eps, .. } => *eps,
            Operator::Homogenized(_) => 0.0,
        }
    }

    /// Stiffness matrix on every node of the grid.
    pub fn stiffness_full(&self, grid: &DomainGrid) -> SparseSymMatrix {
        match self {
            Operator::Oscillating { field, eps } => assemble_stiffness_domain_full(field, *eps, grid),
            Operator::Homogenized(t) => assemble_stiffness_constant_full(t, grid),
        }
    }

    /// Coefficient matrix at a physical point.
    pub fn coefficient_at(&self, x: &[f64]) -> Tensor {
        match self {
            Operator::Oscillating { field, eps } => {
                let mut y = [0.0; MAX_DIM];
                for (k, v) in x.iter().enumerate() {
                    y[k] = v / eps;
                }
                field.evaluate(&y[..x.len()])
            }
            Operator::Homogenized(t) => *t,
        }
    }

    fn validate(&self, grid: &DomainGrid) -> Result<()> {
        let d = match self {
            Operator::Oscillating { field, eps } => {
                if !(*eps > 0.0 && eps.is_finite()) {
                    return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
                }
                field.dim()
            }
            Operator::Homogenized(t) => t.dim(),
        };
        if d != grid.dim() {
            return Err(Error::InvalidInput("operator and grid dimensions differ".into()));
        }
        Ok(())
    }
}

/// Solves `L u = f` with `u = 0` on the boundary. `f` and the result are full
/// nodal vectors; the load is the consistent mass applied to the interpolant of `f`.
pub fn solve_source(op: &Operator, f: &[f64], grid: &DomainGrid, tol: f64) -> Result<Vec<f64>> {
    op.validate(grid)?;
    if f.len() != grid.num_nodes() {
        return Err(Error::InvalidInput(format!("f has {} values, grid has {} nodes", f.len(), grid.num_nodes())));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("f has non-finite values".into()));
    }
    let m = assemble_mass(grid);
    let load = grid.restrict_vector(&m.matvec(f));
    let k = grid.restrict_matrix(&op.stiffness_full(grid));
    let u = factor_solve(&k, &load, tol, None)?;
    Ok(grid.extend_vector(&u))
}

/// Solutions of `L_eps Phi_j = 0` with `Phi_j = x_j` on the boundary.
#[derive(Clone, Debug)]
pub struct DirichletCorrector {
    pub eps: f64,
    /// Full nodal vectors, one per axis.
    pub phi: Vec<Vec<f64>>,
    /// `max |Phi_j - x_j|` over nodes, per axis.
    pub deviation_sup: Vec<f64>,
}

impl DirichletCorrector {
    /// Smallest and largest nodal value of `Phi_j`.
    pub fn range(&self, j: usize) -> (f64, f64) {
        self.phi[j].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

pub fn dirichlet_corrector(field: &CoefficientField, eps: f64, grid: &DomainGrid, tol: f64) -> Result<DirichletCorrector> {
    let op = Operator::Oscillating { field: field.clone(), eps };
    op.validate(grid)?;
    let d = grid.dim();
    let k_full = op.stiffness_full(grid);
    let k = grid.restrict_matrix(&k_full);
    let mut phi = Vec::with_capacity(d);
    let mut deviation_sup = Vec::with_capacity(d);
    for j in 0..d {
        let mut g = vec![0.0; grid.num_nodes()];
        for &b in grid.boundary_nodes() {
            g[b] = grid.node_coords(b)[j];
        }
        let rhs: Vec<f64> = grid.restrict_vector(&k_full.matvec(&g)).iter().map(|v| -v).collect();
        let interior = factor_solve(&k, &rhs, tol, None)?;
        for (v, &i) in interior.iter().zip(grid.interior_nodes()) {
            g[i] = *v;
        }
        let dev = (0..grid.num_nodes()).map(|i| (g[i] - grid.node_coords(i)[j]).abs()).fold(0.0, f64::max);
        phi.push(g);
        deviation_sup.push(dev);
    }
    Ok(DirichletCorrector { eps, phi, deviation_sup })
}

/// Error measures of the first-order corrector approximation
/// `u_0 + (Phi_j - x_j) d_j u_0` of `u_eps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproximationReport {
    pub eps: f64,
    pub h: f64,
    /// `||w_eps||_{H1}` with `w_eps = u_eps - u_0 - (Phi_j - x_j) d_j u_0`.
    pub h1_error: f64,
    /// `||u_eps - u_0||_{L2}`.
    pub l2_error: f64,
    /// `||grad u_eps - (grad Phi_eps) grad u_0||_{L2}`.
    pub grad_error: f64,
    pub f_norm: f64,
}

impl ApproximationReport {
    pub fn h1_over_eps_f(&self) -> f64 {
        self.h1_error / (self.eps * self.f_norm)
    }
}

/// Quadrature of `|u|^2` and `|grad u|^2` over the domain for a full nodal vector.
fn l2_h1_seminorm_sq(grid: &DomainGrid, u: &[f64]) -> (f64, f64) {
    let d = grid.dim();
    let quad = Quadrature::gauss2(d);
    let w = quad.element_weights(grid.h());
    let vals: Vec<_> = quad.points().iter().map(|xi| shape_values(d, &xi[..d])).collect();
    let (mut l2, mut semi) = (0.0, 0.0);
    for e in 0..grid.num_elements() {
        let nodes = grid.element_nodes(e);
        for (g, xi) in quad.points().iter().enumerate() {
            let v: f64 = (0..(1 << d)).map(|b| u[nodes[b]] * vals[g][b]).sum();
            let gr = grid.element_gradient(u, e, &xi[..d]);
            l2 += w[g] * v * v;
            semi += w[g] * gr[..d].iter().map(|x| x * x).sum::<f64>();
        }
    }
    (l2, semi)
}

/// `||f||_{L2}` of the nodal interpolant.
pub fn l2_norm(grid: &DomainGrid, f: &[f64]) -> f64 {
    l2_h1_seminorm_sq(grid, f).0.sqrt()
}

pub fn corrector_approximation(
    u_eps: &[f64],
    u_0: &[f64],
    corrector: &DirichletCorrector,
    f: &[f64],
    grid: &DomainGrid,
) -> Result<ApproximationReport> {
    let nn = grid.num_nodes();
    let d = grid.dim();
    if u_eps.len() != nn || u_0.len() != nn || f.len() != nn || corrector.phi.iter().any(|p| p.len() != nn) {
        return Err(Error::InvalidInput("vectors do not match the grid".into()));
    }
    if corrector.phi.len() != d {
        return Err(Error::InvalidInput("corrector has the wrong number of axes".into()));
    }
    let grad_u0 = grid.recover_gradient(u_0);
    let mut w: Vec<f64> = u_eps.iter().zip(u_0).map(|(a, b)| a - b).collect();
    let (l2_diff, _) = l2_h1_seminorm_sq(grid, &w);
    for (i, wi) in w.iter_mut().enumerate() {
        let x = grid.node_coords(i);
        for j in 0..d {
            *wi -= (corrector.phi[j][i] - x[j]) * grad_u0[i][j];
        }
    }
    let (wl2, wsemi) = l2_h1_seminorm_sq(grid, &w);

    // the gradient form needs no nodal values, so u_0 keeps its element gradient
    let quad = Quadrature::gauss2(d);
    let qw = quad.element_weights(grid.h());
    let mut grad_err = 0.0;
    for e in 0..grid.num_elements() {
        for (g, xi) in quad.points().iter().enumerate() {
            let gu = grid.element_gradient(u_eps, e, &xi[..d]);
            let g0 = grid.element_gradient(u_0, e, &xi[..d]);
            let mut diff = gu;
            for j in 0..d {
                let gphi = grid.element_gradient(&corrector.phi[j], e, &xi[..d]);
                for i in 0..d {
                    diff[i] -= gphi[i] * g0[j];
                }
            }
            grad_err += qw[g] * diff[..d].iter().map(|x| x * x).sum::<f64>();
        }
    }
    Ok(ApproximationReport {
        eps: corrector.eps,
        h: grid.h(),
        h1_error: (wl2 + wsemi).sqrt(),
        l2_error: l2_diff.sqrt(),
        grad_error: grad_err.sqrt(),
        f_norm: l2_norm(grid, f),
    })
}

/// The `count` smallest Dirichlet eigenpairs of `op`. Vectors are full nodal
/// vectors (zero on the boundary) with unit L2 norm.
pub fn eigen_spectrum(op: &Operator, grid: &DomainGrid, count: usize, opts: &EigenOptions) -> Result<Vec<EigenPair>> {
    op.validate(grid)?;
    let k = grid.restrict_matrix(&op.stiffness_full(grid));
    let m = grid.restrict_matrix(&assemble_mass(grid));
    let pairs = smallest_eigenpairs_with(&k, &m, count, opts)?;
    Ok(pairs
        .into_iter()
        .map(|p| EigenPair { lambda: p.lambda, residual: p.residual, vector: grid.extend_vector(&p.vector) })
        .collect())
}

/// Cluster projection onto the window `sqrt(lambda_k) in [sqrt(lam), sqrt(lam) + 1)`.
#[derive(Clone, Debug)]
pub struct SpectralProjection {
    pub projection: Vec<f64>,
    /// `sum (lambda_k - lam) <phi_k, f> phi_k` over the window.
    pub remainder: Vec<f64>,
    /// Indices (zero-based) of the eigenpairs inside the window.
    pub window: Vec<usize>,
    pub f_norm: f64,
    pub projection_norm: f64,
    pub remainder_norm: f64,
    /// `||R f|| / (sqrt(lam) ||f||)`, zero when `f = 0`.
    pub remainder_constant: f64,
}

/// `mass` is the mass matrix matching the eigenvectors (full-grid mass for
/// vectors returned by [`eigen_spectrum`]).
pub fn spectral_projection(
    spectrum: &[EigenPair],
    mass: &SparseSymMatrix,
    f: &[f64],
    lam: f64,
) -> Result<SpectralProjection> {
    if !(lam >= 1.0 && lam.is_finite()) {
        return Err(Error::InvalidInput(format!("window parameter must be at least 1, got {lam}")));
    }
    if f.len() != mass.dim() || spectrum.iter().any(|p| p.vector.len() != mass.dim()) {
        return Err(Error::InvalidInput("vector sizes do not match the mass matrix".into()));
    }
    let lo = lam.sqrt();
    let hi = lo + 1.0;
    let largest = spectrum.iter().map(|p| p.lambda).fold(f64::NEG_INFINITY, f64::max);
    if spectrum.is_empty() || largest.sqrt() < hi {
        return Err(Error::IncompleteSpectrum { needed: hi * hi, largest });
    }
    let mf = mass.matvec(f);
    let n = f.len();
    let mut projection = vec![0.0; n];
    let mut remainder = vec![0.0; n];
    let mut window = Vec::new();
    for (idx, p) in spectrum.iter().enumerate() {
        let s = p.lambda.sqrt();
        if s >= lo && s < hi {
            let c: f64 = p.vector.iter().zip(&mf).map(|(a, b)| a * b).sum();
            for ((pr, rr), v) in projection.iter_mut().zip(remainder.iter_mut()).zip(&p.vector) {
                *pr += c * v;
                *rr += (p.lambda - lam) * c * v;
            }
            window.push(idx);
        }
    }
    let norm = |v: &[f64]| mass.inner(v, v).max(0.0).sqrt();
    let f_norm = norm(f);
    let remainder_norm = norm(&remainder);
    Ok(SpectralProjection {
        projection_norm: norm(&projection),
        remainder_constant: if f_norm > 0.0 { remainder_norm / (lam.sqrt() * f_norm) } else { 0.0 },
        remainder_norm,
        f_norm,
        projection,
        remainder,
        window,
    })
}
