//! Normal derivatives on the boundary of the unit square, boundary flux
//! integrals, the Rellich identity and near-boundary layer energies.

use std::fmt;

use crate::coefficient::MAX_DIM;
use crate::domain::Operator;
use crate::error::{Error, Result};
use crate::linalg::{factor_solve, SparseSymMatrix};
use crate::mesh::{assemble_mass, shape_values, DomainGrid, Quadrature};

/// Which side of the critical scaling `eps^2 lambda ~ 1` a record sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `eps^2 lambda >= 1`.
    Eps2LambdaGe1,
    /// `eps^2 lambda < 1`.
    Eps2LambdaLt1,
}

impl Regime {
    pub fn classify(eps: f64, lambda: f64) -> Self {
        if eps * eps * lambda >= 1.0 {
            Regime::Eps2LambdaGe1
        } else {
            Regime::Eps2LambdaLt1
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Eps2LambdaGe1 => "eps2_lambda_ge_1",
            Regime::Eps2LambdaLt1 => "eps2_lambda_lt_1",
        })
    }
}

/// Boundary integral of `|grad u|^2` for one solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxRecord {
    pub eps: f64,
    /// One-based eigen index, or 0 for source problems.
    pub k: usize,
    pub lambda: f64,
    /// From the variationally recovered conormal derivative.
    pub flux: f64,
    /// From element gradients sampled at boundary Gauss points.
    pub flux_raw: f64,
    pub flux_over_lambda: f64,
    pub regime: Regime,
}

impl FluxRecord {
    pub fn eps2_lambda(&self) -> f64 {
        self.eps * self.eps * self.lambda
    }

    pub fn flux_over_lambda_1p5(&self) -> f64 {
        self.flux / self.lambda.powf(1.5)
    }

    /// `flux / (lambda (1 + eps lambda))`.
    pub fn flux_over_refined(&self) -> f64 {
        self.flux / (self.lambda * (1.0 + self.eps * self.lambda))
    }

    /// Relative disagreement of the two recoveries.
    pub fn recovery_gap(&self) -> f64 {
        if self.flux == 0.0 && self.flux_raw == 0.0 {
            0.0
        } else {
            (self.flux - self.flux_raw).abs() / self.flux.abs().max(self.flux_raw.abs())
        }
    }
}

/// Conormal derivative `g = n . A grad u` at the boundary nodes.
#[derive(Clone, Debug)]
pub struct BoundaryTrace {
    /// Full-grid index to position in `g`, `usize::MAX` for interior nodes.
    slot: Vec<usize>,
    pub g: Vec<f64>,
    /// `int_{boundary} g`.
    pub total: f64,
    /// `-int (lambda u + f)`, equal to `total` by the divergence theorem.
    pub volume_balance: f64,
}

impl BoundaryTrace {
    pub fn at(&self, node: usize) -> Option<f64> {
        self.slot.get(node).and_then(|&s| self.g.get(s)).copied()
    }
}

fn require_2d(grid: &DomainGrid) -> Result<()> {
    if grid.dim() != 2 {
        return Err(Error::InvalidInput("boundary analysis is implemented for the unit square only".into()));
    }
    Ok(())
}

/// Recovers `g` from `int_{boundary} g v = a(u, v) - lambda <u, v> - <f, v>`
/// for all boundary-supported test functions `v`, solving with the edge mass
/// matrix of the boundary.
pub fn conormal_derivative(
    u: &[f64],
    op: &Operator,
    lambda: f64,
    f: Option<&[f64]>,
    grid: &DomainGrid,
) -> Result<BoundaryTrace> {
    require_2d(grid)?;
    let nn = grid.num_nodes();
    if u.len() != nn || f.is_some_and(|f| f.len() != nn) {
        return Err(Error::InvalidInput("vectors do not match the grid".into()));
    }
    let k = op.stiffness_full(grid);
    let m = assemble_mass(grid);
    let ku = k.matvec(u);
    let mu = m.matvec(u);
    let mf = f.map(|f| m.matvec(f)).unwrap_or_else(|| vec![0.0; nn]);
    let r: Vec<f64> = (0..nn).map(|i| ku[i] - lambda * mu[i] - mf[i]).collect();

    let mut slot = vec![usize::MAX; nn];
    for (s, &b) in grid.boundary_nodes().iter().enumerate() {
        slot[b] = s;
    }
    let nb = grid.boundary_nodes().len();
    let mut trip = Vec::with_capacity(4 * grid.boundary_edges().len());
    for e in grid.boundary_edges() {
        let (a, b) = (slot[e.nodes[0]], slot[e.nodes[1]]);
        let l = e.length;
        trip.push((a, a, l / 3.0));
        trip.push((b, b, l / 3.0));
        trip.push((a, b, l / 6.0));
        trip.push((b, a, l / 6.0));
    }
    let mb = SparseSymMatrix::from_triplets(nb, &trip)?;
    let rb: Vec<f64> = grid.boundary_nodes().iter().map(|&b| r[b]).collect();
    let g = factor_solve(&mb, &rb, 1e-12, None)?;
    let total = rb.iter().sum();
    let volume_balance = -(lambda * mu.iter().sum::<f64>() + mf.iter().sum::<f64>());
    Ok(BoundaryTrace { slot, g, total, volume_balance })
}

/// Visits the four-point Gauss rule on every boundary edge with the physical
/// point, the weight, the outward normal and the owning element's reference
/// coordinates.
fn for_each_edge_point<F>(grid: &DomainGrid, mut visit: F)
where
    F: FnMut(usize, f64, [f64; 2], [f64; 2], [f64; 2], f64),
{
    let q = Quadrature::gauss4(1);
    let h = grid.h();
    for (ei, e) in grid.boundary_edges().iter().enumerate() {
        let origin = grid.element_origin(e.element);
        for (t, w) in q.points().iter().zip(q.weights()) {
            let s = t[0];
            let x = [e.start[0] + s * e.length * e.tangent[0], e.start[1] + s * e.length * e.tangent[1]];
            let xi = [((x[0] - origin[0]) / h).clamp(0.0, 1.0), ((x[1] - origin[1]) / h).clamp(0.0, 1.0)];
            visit(ei, w * e.length, x, e.normal, xi, s);
        }
    }
}

/// `int_{boundary} |grad u|^2` for `u` with zero trace, where the full
/// gradient is normal and `du/dn = g / (n . A n)`.
pub fn boundary_flux(
    u: &[f64],
    op: &Operator,
    lambda: f64,
    f: Option<&[f64]>,
    k: usize,
    grid: &DomainGrid,
) -> Result<FluxRecord> {
    let trace = conormal_derivative(u, op, lambda, f, grid)?;
    let edges = grid.boundary_edges();
    let mut flux = 0.0;
    let mut flux_raw = 0.0;
    for_each_edge_point(grid, |ei, w, x, n, xi, s| {
        let e = &edges[ei];
        let g0 = trace.at(e.nodes[0]).unwrap_or(0.0);
        let g1 = trace.at(e.nodes[1]).unwrap_or(0.0);
        let g = (1.0 - s) * g0 + s * g1;
        let nan = op.coefficient_at(&x).bilinear(&n, &n);
        let dn = g / nan;
        flux += w * dn * dn;
        let gr = grid.element_gradient(u, e.element, &xi);
        flux_raw += w * (gr[0] * gr[0] + gr[1] * gr[1]);
    });
    let eps = op.eps();
    Ok(FluxRecord {
        eps,
        k,
        lambda,
        flux,
        flux_raw,
        flux_over_lambda: if lambda != 0.0 { flux / lambda } else { f64::NAN },
        regime: Regime::classify(eps, lambda),
    })
}

/// Both sides of the Rellich identity for `u` with zero trace solving
/// `L u = rhs`, with vector field `h(x) = x - center`:
///
/// `int_{boundary} (h.n)(n.A n)(du/dn)^2
///   = -int div(h) A grad u . grad u - int h_k d_k(A) grad u . grad u
///     + 2 int d_i h_k a_ij d_k u d_j u - 2 int rhs (h . grad u)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RellichSides {
    pub lhs: f64,
    pub rhs: f64,
}

impl RellichSides {
    /// `|lhs - rhs| / (|lhs| + |rhs|)`, zero when both vanish.
    pub fn residual(&self) -> f64 {
        let den = self.lhs.abs() + self.rhs.abs();
        if den == 0.0 {
            0.0
        } else {
            (self.lhs - self.rhs).abs() / den
        }
    }
}

pub fn rellich_sides(u: &[f64], rhs: &[f64], op: &Operator, center: [f64; 2], grid: &DomainGrid) -> Result<RellichSides> {
    require_2d(grid)?;
    // L u = rhs is the eigen/source equation with lambda folded into rhs
    let trace = conormal_derivative(u, op, 0.0, Some(rhs), grid)?;
    let edges = grid.boundary_edges();
    let mut lhs = 0.0;
    for_each_edge_point(grid, |ei, w, x, n, _, s| {
        let e = &edges[ei];
        let g = (1.0 - s) * trace.at(e.nodes[0]).unwrap_or(0.0) + s * trace.at(e.nodes[1]).unwrap_or(0.0);
        let hn = (x[0] - center[0]) * n[0] + (x[1] - center[1]) * n[1];
        let nan = op.coefficient_at(&x).bilinear(&n, &n);
        lhs += w * hn * g * g / nan;
    });

    let d = 2;
    let quad = Quadrature::gauss2(d);
    let qw = quad.element_weights(grid.h());
    let vals: Vec<_> = quad.points().iter().map(|xi| shape_values(d, &xi[..d])).collect();
    let mut right = 0.0;
    for e in 0..grid.num_elements() {
        let nodes = grid.element_nodes(e);
        let x0 = grid.element_origin(e);
        for (g, xi) in quad.points().iter().enumerate() {
            let x = [x0[0] + grid.h() * xi[0], x0[1] + grid.h() * xi[1]];
            let hv = [x[0] - center[0], x[1] - center[1]];
            let gu = grid.element_gradient(u, e, &xi[..d]);
            let a = op.coefficient_at(&x);
            let energy = a.bilinear(&gu[..d], &gu[..d]);
            let mut dir = 0.0;
            if let Operator::Oscillating { field, eps } = op {
                let y = [x[0] / eps, x[1] / eps];
                let da = field.gradient(&y);
                for (k, dak) in da.iter().enumerate().take(d) {
                    dir += hv[k] * dak.bilinear(&gu[..d], &gu[..d]) / eps;
                }
            }
            let f: f64 = (0..4).map(|b| rhs[nodes[b]] * vals[g][b]).sum();
            let h_dot_grad = hv[0] * gu[0] + hv[1] * gu[1];
            // div h = d and d_i h_k = delta_ik for h = x - center
            right += qw[g] * (-(d as f64) * energy - dir + 2.0 * energy - 2.0 * f * h_dot_grad);
        }
    }
    Ok(RellichSides { lhs, rhs: right })
}

pub fn rellich_residual(u: &[f64], rhs: &[f64], op: &Operator, center: [f64; 2], grid: &DomainGrid) -> Result<f64> {
    Ok(rellich_sides(u, rhs, op, center, grid)?.residual())
}

/// `(1/eps) int |grad u|^2` over the elements whose centroid lies within
/// `c_layer * eps` of the boundary.
pub fn boundary_layer_energy(u: &[f64], eps: f64, c_layer: f64, grid: &DomainGrid) -> Result<f64> {
    let width = c_layer * eps;
    if !(width > 0.0 && width < 0.5) {
        return Err(Error::InvalidInput(format!("layer width {width} must lie in (0, 0.5)")));
    }
    if width < grid.h() {
        return Err(Error::EmptyLayer { width, h: grid.h() });
    }
    if u.len() != grid.num_nodes() {
        return Err(Error::InvalidInput("vector does not match the grid".into()));
    }
    let d = grid.dim();
    let h = grid.h();
    let quad = Quadrature::gauss2(d);
    let qw = quad.element_weights(h);
    let mut total = 0.0;
    for e in 0..grid.num_elements() {
        let x0 = grid.element_origin(e);
        let mut dist = f64::INFINITY;
        for k in 0..d {
            let c = x0[k] + 0.5 * h;
            dist = dist.min(c).min(1.0 - c);
        }
        if dist >= width {
            continue;
        }
        for (g, xi) in quad.points().iter().enumerate() {
            let gr: [f64; MAX_DIM] = grid.element_gradient(u, e, &xi[..d]);
            total += qw[g] * gr[..d].iter().map(|v| v * v).sum::<f64>();
        }
    }
    Ok(total / eps)
}
