//! Uniform tensor-product meshes with multilinear (Q1) elements.
//!
//! Nodes are numbered lexicographically with the first axis fastest. The
//! periodic cell identifies opposite faces, so it has `n^d` nodes; the
//! Dirichlet square keeps all `(n+1)^d` nodes and marks the boundary ones.

use crate::coefficient::{CoefficientField, Tensor, MAX_DIM};
use crate::error::{Error, Result};
use crate::linalg::SparseSymMatrix;

const MAX_LOCAL: usize = 1 << MAX_DIM;

/// Tensor-product Gauss rule on the reference cube `[0,1]^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Quadrature {
    dim: usize,
    points: Vec<[f64; MAX_DIM]>,
    weights: Vec<f64>,
}

impl Quadrature {
    /// Two points per axis; exact for polynomials of degree 3 in each variable.
    pub fn gauss2(dim: usize) -> Self {
        Self::tensor(dim, &[0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()], &[0.5, 0.5])
    }

    /// Four points per axis, used for edge integrals that need more accuracy.
    pub fn gauss4(dim: usize) -> Self {
        let a = (3.0 / 7.0 - 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
        let b = (3.0 / 7.0 + 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
        let wa = (18.0 + 30f64.sqrt()) / 36.0;
        let wb = (18.0 - 30f64.sqrt()) / 36.0;
        let pts = [0.5 - 0.5 * b, 0.5 - 0.5 * a, 0.5 + 0.5 * a, 0.5 + 0.5 * b];
        let wts = [0.5 * wb, 0.5 * wa, 0.5 * wa, 0.5 * wb];
        Self::tensor(dim, &pts, &wts)
    }

    fn tensor(dim: usize, p1: &[f64], w1: &[f64]) -> Self {
        let q = p1.len();
        let total = q.pow(dim as u32);
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut pt = [0.0; MAX_DIM];
            let mut w = 1.0;
            for k in 0..dim {
                pt[k] = p1[rem % q];
                w *= w1[rem % q];
                rem /= q;
            }
            points.push(pt);
            weights.push(w);
        }
        Self { dim, points, weights }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Reference points in `[0,1]^d`.
    pub fn points(&self) -> &[[f64; MAX_DIM]] {
        &self.points
    }

    /// Reference weights; they sum to 1.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weights for an element of side `h`; they sum to `h^d`.
    pub fn element_weights(&self, h: f64) -> Vec<f64> {
        let vol = h.powi(self.dim as i32);
        self.weights.iter().map(|w| w * vol).collect()
    }
}

/// Values of the `2^d` local shape functions at reference point `xi`.
/// Local node `b` sits at the cube corner whose `k`-th coordinate is bit `k` of `b`.
pub fn shape_values(dim: usize, xi: &[f64]) -> [f64; MAX_LOCAL] {
    let mut out = [0.0; MAX_LOCAL];
    for (b, o) in out.iter_mut().enumerate().take(1 << dim) {
        let mut v = 1.0;
        for k in 0..dim {
            v *= if (b >> k) & 1 == 1 { xi[k] } else { 1.0 - xi[k] };
        }
        *o = v;
    }
    out
}

/// Physical gradients of the local shape functions on an element of side `h`.
pub fn shape_gradients(dim: usize, xi: &[f64], h: f64) -> [[f64; MAX_DIM]; MAX_LOCAL] {
    let mut out = [[0.0; MAX_DIM]; MAX_LOCAL];
    for (b, g) in out.iter_mut().enumerate().take(1 << dim) {
        for k in 0..dim {
            let mut v = if (b >> k) & 1 == 1 { 1.0 } else { -1.0 };
            for m in 0..dim {
                if m != k {
                    v *= if (b >> m) & 1 == 1 { xi[m] } else { 1.0 - xi[m] };
                }
            }
            g[k] = v / h;
        }
    }
    out
}

/// Shared index arithmetic of both grid kinds.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Lattice {
    dim: usize,
    n: usize,
    periodic: bool,
}

impl Lattice {
    fn nodes_per_axis(&self) -> usize {
        if self.periodic {
            self.n
        } else {
            self.n + 1
        }
    }

    fn num_nodes(&self) -> usize {
        self.nodes_per_axis().pow(self.dim as u32)
    }

    fn num_elements(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    fn node_multi(&self, mut idx: usize) -> [usize; MAX_DIM] {
        let npa = self.nodes_per_axis();
        let mut m = [0; MAX_DIM];
        for mk in m.iter_mut().take(self.dim) {
            *mk = idx % npa;
            idx /= npa;
        }
        m
    }

    fn node_index(&self, multi: &[usize]) -> usize {
        let npa = self.nodes_per_axis();
        let mut idx = 0;
        for k in (0..self.dim).rev() {
            idx = idx * npa + multi[k];
        }
        idx
    }

    fn node_coords(&self, idx: usize) -> [f64; MAX_DIM] {
        let m = self.node_multi(idx);
        let mut x = [0.0; MAX_DIM];
        for k in 0..self.dim {
            x[k] = m[k] as f64 * self.h();
        }
        x
    }

    fn element_multi(&self, mut e: usize) -> [usize; MAX_DIM] {
        let mut m = [0; MAX_DIM];
        for mk in m.iter_mut().take(self.dim) {
            *mk = e % self.n;
            e /= self.n;
        }
        m
    }

    fn element_origin(&self, e: usize) -> [f64; MAX_DIM] {
        let m = self.element_multi(e);
        let mut x = [0.0; MAX_DIM];
        for k in 0..self.dim {
            x[k] = m[k] as f64 * self.h();
        }
        x
    }

    fn element_nodes(&self, e: usize) -> [usize; MAX_LOCAL] {
        let em = self.element_multi(e);
        let mut out = [0; MAX_LOCAL];
        for (b, o) in out.iter_mut().enumerate().take(1 << self.dim) {
            let mut m = [0; MAX_DIM];
            for k in 0..self.dim {
                let v = em[k] + ((b >> k) & 1);
                m[k] = if self.periodic { v % self.n } else { v };
            }
            *o = self.node_index(&m[..self.dim]);
        }
        out
    }

    /// CSR pattern of the nodal coupling stencil `{-1,0,1}^d`.
    fn pattern(&self) -> (Vec<usize>, Vec<usize>) {
        let nn = self.num_nodes();
        let npa = self.nodes_per_axis() as isize;
        let stencil = 3usize.pow(self.dim as u32);
        let mut row_ptr = Vec::with_capacity(nn + 1);
        row_ptr.push(0);
        let mut cols = Vec::with_capacity(nn * stencil);
        let mut row = Vec::with_capacity(stencil);
        for i in 0..nn {
            let base = self.node_multi(i);
            row.clear();
            'off: for s in 0..stencil {
                let mut rem = s;
                let mut m = [0usize; MAX_DIM];
                for k in 0..self.dim {
                    let off = (rem % 3) as isize - 1;
                    rem /= 3;
                    let mut v = base[k] as isize + off;
                    if self.periodic {
                        v = v.rem_euclid(npa);
                    } else if v < 0 || v >= npa {
                        continue 'off;
                    }
                    m[k] = v as usize;
                }
                row.push(self.node_index(&m[..self.dim]));
            }
            row.sort_unstable();
            row.dedup();
            cols.extend_from_slice(&row);
            row_ptr.push(cols.len());
        }
        (row_ptr, cols)
    }
}

/// Periodic grid on the unit cell `[0,1)^d` with `n` cells per axis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusGrid {
    lat: Lattice,
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        check_dims(dim, n)?;
        Ok(Self { lat: Lattice { dim, n, periodic: true } })
    }

    pub fn dim(&self) -> usize {
        self.lat.dim
    }

    pub fn n(&self) -> usize {
        self.lat.n
    }

    pub fn h(&self) -> f64 {
        self.lat.h()
    }

    pub fn num_dofs(&self) -> usize {
        self.lat.num_nodes()
    }

    pub fn num_elements(&self) -> usize {
        self.lat.num_elements()
    }

    pub fn node_coords(&self, idx: usize) -> [f64; MAX_DIM] {
        self.lat.node_coords(idx)
    }

    pub fn node_multi(&self, idx: usize) -> [usize; MAX_DIM] {
        self.lat.node_multi(idx)
    }

    pub fn node_index(&self, multi: &[usize]) -> usize {
        self.lat.node_index(multi)
    }

    /// Global dofs of element `e` in local-corner order (see [`shape_values`]).
    pub fn element_dofs(&self, e: usize) -> [usize; MAX_LOCAL] {
        self.lat.element_nodes(e)
    }

    pub fn element_origin(&self, e: usize) -> [f64; MAX_DIM] {
        self.lat.element_origin(e)
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        let d = self.dim();
        (0..self.num_dofs()).map(|i| f(&self.node_coords(i)[..d])).collect()
    }
}

/// One edge of the boundary of the unit square.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    /// End nodes, ordered along increasing coordinate.
    pub nodes: [usize; 2],
    /// Coordinates of `nodes[0]`.
    pub start: [f64; 2],
    /// Unit tangent from `nodes[0]` to `nodes[1]`.
    pub tangent: [f64; 2],
    /// Unit outward normal.
    pub normal: [f64; 2],
    pub length: f64,
    /// The element that owns this edge.
    pub element: usize,
}

/// Grid on the unit domain `(0,1)^d` with homogeneous Dirichlet conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainGrid {
    lat: Lattice,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    full_to_interior: Vec<usize>,
    edges: Vec<BoundaryEdge>,
}

impl DomainGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        check_dims(dim, n)?;
        let lat = Lattice { dim, n, periodic: false };
        let nn = lat.num_nodes();
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        let mut full_to_interior = vec![usize::MAX; nn];
        for i in 0..nn {
            let m = lat.node_multi(i);
            if m[..dim].iter().any(|&c| c == 0 || c == n) {
                boundary.push(i);
            } else {
                full_to_interior[i] = interior.len();
                interior.push(i);
            }
        }
        let edges = if dim == 2 { square_edges(&lat) } else { Vec::new() };
        Ok(Self { lat, interior, boundary, full_to_interior, edges })
    }

    pub fn dim(&self) -> usize {
        self.lat.dim
    }

    pub fn n(&self) -> usize {
        self.lat.n
    }

    pub fn h(&self) -> f64 {
        self.lat.h()
    }

    pub fn num_nodes(&self) -> usize {
        self.lat.num_nodes()
    }

    pub fn num_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn num_elements(&self) -> usize {
        self.lat.num_elements()
    }

    /// Sorted full-grid indices of the interior nodes.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    /// Sorted full-grid indices of the boundary nodes.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.full_to_interior[idx] == usize::MAX
    }

    /// Interior position of a full-grid node, if it is interior.
    pub fn interior_index(&self, idx: usize) -> Option<usize> {
        let p = self.full_to_interior[idx];
        (p != usize::MAX).then_some(p)
    }

    /// Boundary edges with outward normals. Empty unless `dim == 2`.
    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.edges
    }

    pub fn node_coords(&self, idx: usize) -> [f64; MAX_DIM] {
        self.lat.node_coords(idx)
    }

    pub fn node_multi(&self, idx: usize) -> [usize; MAX_DIM] {
        self.lat.node_multi(idx)
    }

    pub fn node_index(&self, multi: &[usize]) -> usize {
        self.lat.node_index(multi)
    }

    pub fn element_nodes(&self, e: usize) -> [usize; MAX_LOCAL] {
        self.lat.element_nodes(e)
    }

    pub fn element_origin(&self, e: usize) -> [f64; MAX_DIM] {
        self.lat.element_origin(e)
    }

    /// Interior values of a full nodal vector.
    pub fn restrict_vector(&self, full: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&i| full[i]).collect()
    }

    /// Full nodal vector with zero boundary values.
    pub fn extend_vector(&self, interior: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.num_nodes()];
        for (v, &i) in interior.iter().zip(&self.interior) {
            full[i] = *v;
        }
        full
    }

    /// Principal block of a full-grid matrix on the interior nodes.
    pub fn restrict_matrix(&self, full: &SparseSymMatrix) -> SparseSymMatrix {
        full.restrict(&self.interior)
    }

    /// Nodal interpolant of `f` on all nodes.
    pub fn interpolate<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        let d = self.dim();
        (0..self.num_nodes()).map(|i| f(&self.node_coords(i)[..d])).collect()
    }

    /// Gradient of the Q1 interpolant of `u` (full nodal vector) in element `e`
    /// at reference point `xi`.
    pub fn element_gradient(&self, u: &[f64], e: usize, xi: &[f64]) -> [f64; MAX_DIM] {
        let d = self.dim();
        let nodes = self.element_nodes(e);
        let g = shape_gradients(d, xi, self.h());
        let mut out = [0.0; MAX_DIM];
        for b in 0..(1 << d) {
            for k in 0..d {
                out[k] += u[nodes[b]] * g[b][k];
            }
        }
        out
    }

    /// Nodal gradient by averaging the one-sided element gradients of all
    /// elements sharing each node. Equals central differences at interior nodes.
    pub fn recover_gradient(&self, u: &[f64]) -> Vec<[f64; MAX_DIM]> {
        let d = self.dim();
        let nn = self.num_nodes();
        let mut acc = vec![[0.0; MAX_DIM]; nn];
        let mut cnt = vec![0u32; nn];
        for e in 0..self.num_elements() {
            let nodes = self.element_nodes(e);
            for b in 0..(1 << d) {
                let mut xi = [0.0; MAX_DIM];
                for k in 0..d {
                    xi[k] = ((b >> k) & 1) as f64;
                }
                let g = self.element_gradient(u, e, &xi[..d]);
                let i = nodes[b];
                for k in 0..d {
                    acc[i][k] += g[k];
                }
                cnt[i] += 1;
            }
        }
        for (a, c) in acc.iter_mut().zip(&cnt) {
            for v in a.iter_mut().take(d) {
                *v /= *c as f64;
            }
        }
        acc
    }
}

fn check_dims(dim: usize, n: usize) -> Result<()> {
    if !(1..=MAX_DIM).contains(&dim) {
        return Err(Error::InvalidInput(format!("dimension {dim} not in 1..={MAX_DIM}")));
    }
    if n < 2 {
        return Err(Error::InvalidInput(format!("grid needs at least 2 cells per axis, got {n}")));
    }
    Ok(())
}

fn square_edges(lat: &Lattice) -> Vec<BoundaryEdge> {
    let n = lat.n;
    let h = lat.h();
    let mut edges = Vec::with_capacity(4 * n);
    let elem = |i: usize, j: usize| i + n * j;
    for i in 0..n {
        let x = i as f64 * h;
        edges.push(BoundaryEdge {
            nodes: [lat.node_index(&[i, 0]), lat.node_index(&[i + 1, 0])],
            start: [x, 0.0],
            tangent: [1.0, 0.0],
            normal: [0.0, -1.0],
            length: h,
            element: elem(i, 0),
        });
        edges.push(BoundaryEdge {
            nodes: [lat.node_index(&[i, n]), lat.node_index(&[i + 1, n])],
            start: [x, 1.0],
            tangent: [1.0, 0.0],
            normal: [0.0, 1.0],
            length: h,
            element: elem(i, n - 1),
        });
        edges.push(BoundaryEdge {
            nodes: [lat.node_index(&[0, i]), lat.node_index(&[0, i + 1])],
            start: [0.0, x],
            tangent: [0.0, 1.0],
            normal: [-1.0, 0.0],
            length: h,
            element: elem(0, i),
        });
        edges.push(BoundaryEdge {
            nodes: [lat.node_index(&[n, i]), lat.node_index(&[n, i + 1])],
            start: [1.0, x],
            tangent: [0.0, 1.0],
            normal: [1.0, 0.0],
            length: h,
            element: elem(n - 1, i),
        });
    }
    edges
}

/// Either grid kind, for routines that work on both.
#[derive(Clone, Copy, Debug)]
pub enum GridRef<'a> {
    Torus(&'a TorusGrid),
    Domain(&'a DomainGrid),
}

impl<'a> From<&'a TorusGrid> for GridRef<'a> {
    fn from(g: &'a TorusGrid) -> Self {
        GridRef::Torus(g)
    }
}

impl<'a> From<&'a DomainGrid> for GridRef<'a> {
    fn from(g: &'a DomainGrid) -> Self {
        GridRef::Domain(g)
    }
}

impl GridRef<'_> {
    fn lattice(&self) -> &Lattice {
        match self {
            GridRef::Torus(g) => &g.lat,
            GridRef::Domain(g) => &g.lat,
        }
    }
}

fn assemble_stiffness_lattice<F>(lat: &Lattice, coef: F) -> SparseSymMatrix
where
    F: Fn(&[f64]) -> Tensor,
{
    let d = lat.dim;
    let nloc = 1 << d;
    let h = lat.h();
    let quad = Quadrature::gauss2(d);
    let w = quad.element_weights(h);
    let grads: Vec<_> = quad.points().iter().map(|xi| shape_gradients(d, &xi[..d], h)).collect();
    let (row_ptr, cols) = lat.pattern();
    let mut k = SparseSymMatrix::with_pattern(lat.num_nodes(), row_ptr, cols);
    let mut ke = [[0.0; MAX_LOCAL]; MAX_LOCAL];
    for e in 0..lat.num_elements() {
        let x0 = lat.element_origin(e);
        for row in ke.iter_mut().take(nloc) {
            row[..nloc].fill(0.0);
        }
        for (g, xi) in quad.points().iter().enumerate() {
            let mut x = [0.0; MAX_DIM];
            for k in 0..d {
                x[k] = x0[k] + h * xi[k];
            }
            let a = coef(&x[..d]);
            let gr = &grads[g];
            for q in 0..nloc {
                let aq = a.apply(&gr[q][..d]);
                for p in 0..nloc {
                    let mut s = 0.0;
                    for k in 0..d {
                        s += gr[p][k] * aq[k];
                    }
                    ke[p][q] += w[g] * s;
                }
            }
        }
        // symmetrize so assembled values are exactly symmetric
        for p in 0..nloc {
            for q in 0..p {
                let s = 0.5 * (ke[p][q] + ke[q][p]);
                ke[p][q] = s;
                ke[q][p] = s;
            }
        }
        let nodes = lat.element_nodes(e);
        for p in 0..nloc {
            for q in 0..nloc {
                k.add_at(nodes[p], nodes[q], ke[p][q]);
            }
        }
    }
    k
}

/// Stiffness matrix of `-div(A(y) grad)` on the periodic cell.
/// Positive semidefinite with the constants as kernel.
pub fn assemble_stiffness_torus(field: &CoefficientField, grid: &TorusGrid) -> SparseSymMatrix {
    assert_eq!(field.dim(), grid.dim(), "field and grid dimensions differ");
    assemble_stiffness_lattice(&grid.lat, |y| field.evaluate(y))
}

fn resolution_warning(eps: f64, grid: &DomainGrid) {
    if grid.h() > eps / 8.0 + 1e-15 {
        log::warn!(
            "mesh h = {:.3e} does not resolve eps = {:.3e} (want h <= eps/8)",
            grid.h(),
            eps
        );
    }
}

/// Stiffness of `-div(A(x/eps) grad)` on every node of the domain grid.
pub fn assemble_stiffness_domain_full(field: &CoefficientField, eps: f64, grid: &DomainGrid) -> SparseSymMatrix {
    assert_eq!(field.dim(), grid.dim(), "field and grid dimensions differ");
    assert!(eps > 0.0, "eps must be positive");
    resolution_warning(eps, grid);
    let inv = 1.0 / eps;
    assemble_stiffness_lattice(&grid.lat, |x| {
        let mut y = [0.0; MAX_DIM];
        for k in 0..x.len() {
            y[k] = x[k] * inv;
        }
        field.evaluate(&y[..x.len()])
    })
}

/// Stiffness of `-div(A(x/eps) grad)` restricted to interior (Dirichlet) dofs.
pub fn assemble_stiffness_domain(field: &CoefficientField, eps: f64, grid: &DomainGrid) -> SparseSymMatrix {
    grid.restrict_matrix(&assemble_stiffness_domain_full(field, eps, grid))
}

/// Stiffness of a constant tensor on every node of the domain grid.
pub fn assemble_stiffness_constant_full(tensor: &Tensor, grid: &DomainGrid) -> SparseSymMatrix {
    assert_eq!(tensor.dim(), grid.dim());
    assemble_stiffness_lattice(&grid.lat, |_| *tensor)
}

/// Consistent mass matrix on all nodes of either grid kind.
pub fn assemble_mass<'a>(grid: impl Into<GridRef<'a>>) -> SparseSymMatrix {
    let gr = grid.into();
    let lat = gr.lattice();
    let d = lat.dim;
    let nloc = 1 << d;
    let quad = Quadrature::gauss2(d);
    let w = quad.element_weights(lat.h());
    let vals: Vec<_> = quad.points().iter().map(|xi| shape_values(d, &xi[..d])).collect();
    let mut me = [[0.0; MAX_LOCAL]; MAX_LOCAL];
    for (g, v) in vals.iter().enumerate() {
        for p in 0..nloc {
            for q in 0..nloc {
                me[p][q] += w[g] * v[p] * v[q];
            }
        }
    }
    let (row_ptr, cols) = lat.pattern();
    let mut m = SparseSymMatrix::with_pattern(lat.num_nodes(), row_ptr, cols);
    for e in 0..lat.num_elements() {
        let nodes = lat.element_nodes(e);
        for p in 0..nloc {
            for q in 0..nloc {
                m.add_at(nodes[p], nodes[q], me[p][q]);
            }
        }
    }
    m
}

/// Load `-int A(y) e_j . grad v` of the cell problem for axis `j` (zero-based).
pub fn assemble_cell_load(field: &CoefficientField, grid: &TorusGrid, j: usize) -> Result<Vec<f64>> {
    let d = grid.dim();
    if j >= d {
        return Err(Error::InvalidInput(format!("axis {j} out of range for dimension {d}")));
    }
    let nloc = 1 << d;
    let h = grid.h();
    let quad = Quadrature::gauss2(d);
    let w = quad.element_weights(h);
    let grads: Vec<_> = quad.points().iter().map(|xi| shape_gradients(d, &xi[..d], h)).collect();
    let mut load = vec![0.0; grid.num_dofs()];
    let mut ej = [0.0; MAX_DIM];
    ej[j] = 1.0;
    for e in 0..grid.num_elements() {
        let x0 = grid.element_origin(e);
        let mut le = [0.0; MAX_LOCAL];
        for (g, xi) in quad.points().iter().enumerate() {
            let mut y = [0.0; MAX_DIM];
            for k in 0..d {
                y[k] = x0[k] + h * xi[k];
            }
            let col = field.evaluate(&y[..d]).apply(&ej[..d]);
            for p in 0..nloc {
                let mut s = 0.0;
                for k in 0..d {
                    s += col[k] * grads[g][p][k];
                }
                le[p] -= w[g] * s;
            }
        }
        let nodes = grid.element_dofs(e);
        for p in 0..nloc {
            load[nodes[p]] += le[p];
        }
    }
    Ok(load)
}
