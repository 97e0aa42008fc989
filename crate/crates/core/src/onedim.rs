//! One-dimensional Sturm-Liouville laboratory for `-(a(x/eps) u')' = lambda u`
//! on `(0, 1)` with Dirichlet ends, resolved far into the regime `eps^2 lambda ~ 1`.

use std::f64::consts::PI;

use crate::coefficient::{CoefficientField, FieldKind};
use crate::error::{Error, Result};
use crate::linalg::EigenPair;
use crate::mesh::Quadrature;

/// Linear-element discretization of the oscillating 1D problem.
#[derive(Clone, Debug)]
pub struct OneDimProblem {
    field: CoefficientField,
    eps: f64,
    n: usize,
    a_bar: f64,
    /// Harmonic element coefficient `h / int_e dx / a(x/eps)`.
    k_elem: Vec<f64>,
}

/// `int_{x0}^{x1} dx / a(x/eps)`.
fn inverse_integral(field: &CoefficientField, eps: f64, x0: f64, x1: f64) -> f64 {
    if field.kind() == FieldKind::ReciprocalSine {
        // 1/a = (1 + r sin(2 pi x / eps)) / mu integrates in closed form
        let (mu, r) = (field.params()[0], field.params()[1]);
        let w = 2.0 * PI / eps;
        return ((x1 - x0) - r * ((w * x1).cos() - (w * x0).cos()) / w) / mu;
    }
    let q = Quadrature::gauss4(1);
    let h = x1 - x0;
    q.points()
        .iter()
        .zip(q.weights())
        .map(|(p, w)| {
            let x = x0 + h * p[0];
            w * h / field.evaluate(&[x / eps]).get(0, 0)
        })
        .sum()
}

impl OneDimProblem {
    pub fn new(field: CoefficientField, eps: f64, n: usize) -> Result<Self> {
        if field.dim() != 1 {
            return Err(Error::InvalidInput("the 1D lab needs a one-dimensional field".into()));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
        }
        if n < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 cells, got {n}")));
        }
        let h = 1.0 / n as f64;
        let k_elem = (0..n)
            .map(|e| h / inverse_integral(&field, eps, e as f64 * h, (e + 1) as f64 * h))
            .collect();
        // harmonic mean over one period
        let cells = 1024;
        let inv: f64 = (0..cells)
            .map(|c| inverse_integral(&field, 1.0, c as f64 / cells as f64, (c + 1) as f64 / cells as f64))
            .sum();
        Ok(Self { field, eps, n, a_bar: 1.0 / inv, k_elem })
    }

    /// Mesh with `max(4096, ceil(64/eps))` cells.
    pub fn with_default_mesh(field: CoefficientField, eps: f64) -> Result<Self> {
        let n = 4096usize.max((64.0 / eps).ceil() as usize);
        Self::new(field, eps, n)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn a_bar(&self) -> f64 {
        self.a_bar
    }

    pub fn field(&self) -> &CoefficientField {
        &self.field
    }

    /// `a(x/eps)`.
    pub fn a_at(&self, x: f64) -> f64 {
        self.field.evaluate(&[x / self.eps]).get(0, 0)
    }

    /// Interior tridiagonal stiffness: diagonal and first off-diagonal.
    fn stiffness(&self) -> (Vec<f64>, Vec<f64>) {
        let inv_h = self.n as f64;
        let m = self.n - 1;
        let diag = (0..m).map(|i| (self.k_elem[i] + self.k_elem[i + 1]) * inv_h).collect();
        let off = (0..m.saturating_sub(1)).map(|i| -self.k_elem[i + 1] * inv_h).collect();
        (diag, off)
    }

    fn mass(&self) -> (f64, f64) {
        let h = self.h();
        (4.0 * h / 6.0, h / 6.0)
    }

    /// Number of eigenvalues strictly below `sigma` (Sylvester inertia of `K - sigma M`).
    pub fn count_below(&self, sigma: f64) -> usize {
        let (kd, ko) = self.stiffness();
        let (md, mo) = self.mass();
        sturm_count(&kd, &ko, md, mo, sigma)
    }
}

fn sturm_count(kd: &[f64], ko: &[f64], md: f64, mo: f64, sigma: f64) -> usize {
    let mut count = 0;
    let mut d = 0.0;
    for i in 0..kd.len() {
        let diag = kd[i] - sigma * md;
        d = if i == 0 {
            diag
        } else {
            let o = ko[i - 1] - sigma * mo;
            diag - o * o / d
        };
        if d == 0.0 {
            d = -f64::EPSILON * kd[i].abs().max(1.0);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Solves `(K - sigma M) x = b` for the tridiagonal pencil by LDL^T.
fn shifted_solve(kd: &[f64], ko: &[f64], md: f64, mo: f64, sigma: f64, b: &[f64]) -> Vec<f64> {
    let m = kd.len();
    let mut d = vec![0.0; m];
    let mut l = vec![0.0; m];
    let tiny = f64::EPSILON * kd.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for i in 0..m {
        let mut di = kd[i] - sigma * md;
        if i > 0 {
            let o = ko[i - 1] - sigma * mo;
            l[i] = o / d[i - 1];
            di -= l[i] * o;
        }
        if di.abs() < tiny {
            di = if di < 0.0 { -tiny } else { tiny };
        }
        d[i] = di;
    }
    let mut y = b.to_vec();
    for i in 1..m {
        y[i] -= l[i] * y[i - 1];
    }
    for i in 0..m {
        y[i] /= d[i];
    }
    for i in (0..m.saturating_sub(1)).rev() {
        y[i] -= l[i + 1] * y[i + 1];
    }
    y
}

fn tri_apply(d: &[f64], o: &[f64], x: &[f64]) -> Vec<f64> {
    let m = d.len();
    (0..m)
        .map(|i| {
            let mut s = d[i] * x[i];
            if i > 0 {
                s += o[i - 1] * x[i - 1];
            }
            if i + 1 < m {
                s += o[i] * x[i + 1];
            }
            s
        })
        .collect()
}

/// The `count` smallest eigenpairs by Sturm bisection and inverse iteration.
/// Vectors hold all `n + 1` nodal values (zero at both ends) with unit L2 norm
/// in the consistent mass, and positive slope at `x = 0`.
pub fn solve_1d_spectrum(problem: &OneDimProblem, count: usize, tol: f64) -> Result<Vec<EigenPair>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if problem.n < 64 * count {
        return Err(Error::InvalidInput(format!(
            "{} cells cannot resolve {count} eigenpairs (need at least {})",
            problem.n,
            64 * count
        )));
    }
    let (kd, ko) = problem.stiffness();
    let (md, mo) = problem.mass();
    let m = kd.len();
    let mdiag = vec![md; m];
    let moff = vec![mo; m.saturating_sub(1)];
    let row_max = (0..m).map(|i| kd[i].abs() + 2.0 * ko.get(i).map_or(0.0, |v| v.abs())).fold(0.0, f64::max);
    let upper = 1.01 * row_max / (problem.h() / 3.0);

    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let (mut lo, mut hi) = (0.0, upper);
        while hi - lo > 4.0 * f64::EPSILON * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if sturm_count(&kd, &ko, md, mo, mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let sigma = 0.5 * (lo + hi);
        let mut x: Vec<f64> = (0..m).map(|i| ((k + 1) as f64 * PI * (i + 1) as f64 * problem.h()).sin()).collect();
        let mut lambda = sigma;
        let mut residual = f64::INFINITY;
        let mut floor = 0.0;
        for _ in 0..8 {
            let mx = tri_apply(&mdiag, &moff, &x);
            x = shifted_solve(&kd, &ko, md, mo, sigma, &mx);
            let mx = tri_apply(&mdiag, &moff, &x);
            let nrm = x.iter().zip(&mx).map(|(a, b)| a * b).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= nrm);
            let kx = tri_apply(&kd, &ko, &x);
            let mx: Vec<f64> = mx.iter().map(|v| v / nrm).collect();
            lambda = x.iter().zip(&kx).map(|(a, b)| a * b).sum();
            let r: f64 = kx.iter().zip(&mx).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
            let mn = mx.iter().map(|v| v * v).sum::<f64>().sqrt();
            residual = r / (lambda * mn);
            let xmax = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            floor = 64.0 * f64::EPSILON * (row_max + lambda * md * 1.5) * xmax * (m as f64).sqrt() / (lambda * mn);
            if residual <= tol.max(floor) {
                break;
            }
        }
        if residual > tol.max(floor) {
            return Err(Error::EigenNotConverged { restarts: 8, worst_residual: residual, partial: out });
        }
        if x[0] < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        let mut vector = Vec::with_capacity(m + 2);
        vector.push(0.0);
        vector.extend(x);
        vector.push(0.0);
        out.push(EigenPair { lambda, vector, residual });
    }
    Ok(out)
}

/// `|u'(0)|^2 + |u'(1)|^2`, with the end fluxes `a u'` recovered from the
/// weak form tested against the end hat functions.
pub fn endpoint_flux(pair: &EigenPair, problem: &OneDimProblem) -> Result<f64> {
    let n = problem.n;
    if pair.vector.len() != n + 1 {
        return Err(Error::InvalidInput(format!("vector has {} values, mesh has {} nodes", pair.vector.len(), n + 1)));
    }
    let u = &pair.vector;
    let h = problem.h();
    let lam = pair.lambda;
    // row 0 of K u - lambda M u equals -a(0) u'(0); row n equals a(1/eps) u'(1)
    let r0 = problem.k_elem[0] / h * (u[0] - u[1]) - lam * h / 6.0 * (2.0 * u[0] + u[1]);
    let r1 = problem.k_elem[n - 1] / h * (u[n] - u[n - 1]) - lam * h / 6.0 * (2.0 * u[n] + u[n - 1]);
    let d0 = r0 / problem.a_at(0.0);
    let d1 = r1 / problem.a_at(1.0);
    Ok(d0 * d0 + d1 * d1)
}

/// One eigenvalue of a resonance scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResonanceRow {
    pub eps: f64,
    /// One-based index.
    pub k: usize,
    pub lambda: f64,
    pub flux: f64,
    pub flux_over_lambda: f64,
    pub flux_over_lambda_1p5: f64,
    pub eps2_lambda: f64,
}

#[derive(Clone, Debug)]
pub struct ResonanceScan {
    pub rows: Vec<ResonanceRow>,
    /// Position in `rows` of the largest `flux / lambda`.
    pub peak: Option<usize>,
}

/// Eigenvalues of `problem` in `[lambda_min, lambda_max]` with their endpoint
/// fluxes and normalizations.
pub fn resonance_scan(problem: &OneDimProblem, lambda_min: f64, lambda_max: f64, tol: f64) -> Result<ResonanceScan> {
    let eps = problem.eps;
    if (problem.n as f64) < 32.0 / eps {
        return Err(Error::InsufficientResolution(format!(
            "{} cells for eps = {eps}; need at least {}",
            problem.n,
            (32.0 / eps).ceil()
        )));
    }
    if !(lambda_min <= lambda_max) {
        return Err(Error::InvalidInput("empty eigenvalue range".into()));
    }
    let count = problem.count_below(lambda_max * (1.0 + 1e-12));
    let pairs = solve_1d_spectrum(problem, count, tol)?;
    let mut rows = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        if p.lambda < lambda_min {
            continue;
        }
        let flux = endpoint_flux(p, problem)?;
        rows.push(ResonanceRow {
            eps,
            k: i + 1,
            lambda: p.lambda,
            flux,
            flux_over_lambda: flux / p.lambda,
            flux_over_lambda_1p5: flux / p.lambda.powf(1.5),
            eps2_lambda: eps * eps * p.lambda,
        });
    }
    let peak = rows
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.flux_over_lambda.total_cmp(&b.1.flux_over_lambda))
        .map(|(i, _)| i);
    Ok(ResonanceScan { rows, peak })
}
