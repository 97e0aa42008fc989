//! Periodic cell problems, the homogenized tensor, the flux mismatch `b`
//! and the antisymmetric flux corrector `F` with `div F = b`.

use std::io::Write;

use crate::coefficient::{CoefficientField, Tensor, MAX_DIM};
use crate::error::{Error, Result};
use crate::linalg::{norm2, Cholesky, SparseSymMatrix};
use crate::mesh::{assemble_cell_load, assemble_stiffness_torus, shape_gradients, shape_values, Quadrature, TorusGrid};

/// Nodal correctors `chi_j`, one per axis, each with zero mean.
#[derive(Clone, Debug)]
pub struct CorrectorSet {
    grid: TorusGrid,
    chi: Vec<Vec<f64>>,
}

impl CorrectorSet {
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// Corrector for axis `j` (zero-based).
    pub fn chi(&self, j: usize) -> &[f64] {
        &self.chi[j]
    }

    pub fn max_abs(&self) -> f64 {
        self.chi.iter().flatten().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Cell average of `chi_j`.
    pub fn mean(&self, j: usize) -> f64 {
        self.chi[j].iter().sum::<f64>() / self.chi[j].len() as f64
    }
}

/// Constant effective matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomogenizedTensor {
    pub a_hat: Tensor,
    /// `max |a_hat_ij - a_hat_ji|` before symmetrization.
    pub asymmetry: f64,
}

/// Solves `K x_c = b_c` for several compatible right sides of a torus
/// stiffness matrix with kernel = constants, by pinning dof 0.
fn solve_pinned(k: &SparseSymMatrix, loads: &[Vec<f64>], tol: f64) -> Result<Vec<Vec<f64>>> {
    let n = k.dim();
    let keep: Vec<usize> = (1..n).collect();
    let chol = Cholesky::factor(&k.restrict(&keep))?;
    let reduced: Vec<Vec<f64>> = loads.iter().map(|b| b[1..].to_vec()).collect();
    let sols = chol.solve_many(&reduced);
    let mut out = Vec::with_capacity(loads.len());
    for (b, s) in loads.iter().zip(sols) {
        let mut x = Vec::with_capacity(n);
        x.push(0.0);
        x.extend(s);
        let bn = norm2(b);
        let mut rel = f64::INFINITY;
        for step in 0..=4 {
            let kx = k.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&kx).map(|(c, a)| c - a).collect();
            rel = if bn > 0.0 { norm2(&r) / bn } else { norm2(&r) };
            if rel <= tol || step == 4 {
                break;
            }
            let dx = chol.solve(&r[1..]);
            for (xi, d) in x[1..].iter_mut().zip(dx) {
                *xi += d;
            }
        }
        if rel > tol {
            return Err(Error::NotConverged { iterations: 1, residual: rel });
        }
        let mean = x.iter().sum::<f64>() / n as f64;
        x.iter_mut().for_each(|v| *v -= mean);
        out.push(x);
    }
    Ok(out)
}

/// Solves the cell problems `-div(A(e_j + grad chi_j)) = 0` on the torus.
pub fn solve_correctors(field: &CoefficientField, grid: &TorusGrid, tol: f64) -> Result<CorrectorSet> {
    if field.dim() != grid.dim() {
        return Err(Error::InvalidInput("field and grid dimensions differ".into()));
    }
    let d = grid.dim();
    let k = assemble_stiffness_torus(field, grid);
    let mut loads = Vec::with_capacity(d);
    for j in 0..d {
        let mut b = assemble_cell_load(field, grid, j)?;
        // remove the rounding-level incompatibility
        let mean = b.iter().sum::<f64>() / b.len() as f64;
        b.iter_mut().for_each(|v| *v -= mean);
        loads.push(b);
    }
    let chi = if loads.iter().all(|b| b.iter().all(|v| v.abs() < 1e-300)) {
        vec![vec![0.0; grid.num_dofs()]; d]
    } else {
        solve_pinned(&k, &loads, tol)?
    };
    Ok(CorrectorSet { grid: grid.clone(), chi })
}

/// Gradient of a nodal torus function inside element `e` at reference point `xi`.
fn torus_gradient(grid: &TorusGrid, u: &[f64], e: usize, xi: &[f64]) -> [f64; MAX_DIM] {
    let d = grid.dim();
    let dofs = grid.element_dofs(e);
    let g = shape_gradients(d, xi, grid.h());
    let mut out = [0.0; MAX_DIM];
    for b in 0..(1 << d) {
        for k in 0..d {
            out[k] += u[dofs[b]] * g[b][k];
        }
    }
    out
}

/// Visits every Gauss point of the torus grid with its physical point, weight,
/// coefficient value and corrector gradients `grad chi_j`.
fn for_each_gauss<F>(field: &CoefficientField, correctors: &CorrectorSet, mut visit: F)
where
    F: FnMut(usize, &[f64], f64, &Tensor, &[[f64; MAX_DIM]; MAX_DIM]),
{
    let grid = &correctors.grid;
    let d = grid.dim();
    let h = grid.h();
    let quad = Quadrature::gauss2(d);
    let w = quad.element_weights(h);
    for e in 0..grid.num_elements() {
        let x0 = grid.element_origin(e);
        for (g, xi) in quad.points().iter().enumerate() {
            let mut y = [0.0; MAX_DIM];
            for k in 0..d {
                y[k] = x0[k] + h * xi[k];
            }
            let a = field.evaluate(&y[..d]);
            let mut grads = [[0.0; MAX_DIM]; MAX_DIM];
            for (j, gj) in grads.iter_mut().enumerate().take(d) {
                *gj = torus_gradient(grid, &correctors.chi[j], e, &xi[..d]);
            }
            visit(e * quad.len() + g, &y[..d], w[g], &a, &grads);
        }
    }
}

/// `A_hat_ij = int_Y a_ij + a_ik d_k chi_j`, by Gauss quadrature.
///
/// The discrete tensor is symmetric up to the cell-solve residual; the
/// returned matrix is the symmetric part and the defect is kept in
/// `asymmetry`.
pub fn homogenized_tensor(field: &CoefficientField, correctors: &CorrectorSet) -> HomogenizedTensor {
    let d = correctors.grid.dim();
    let mut raw = [[0.0; MAX_DIM]; MAX_DIM];
    for_each_gauss(field, correctors, |_, _, w, a, grads| {
        for j in 0..d {
            let mut col = [0.0; MAX_DIM];
            col[..d].copy_from_slice(&grads[j][..d]);
            col[j] += 1.0;
            let flux = a.apply(&col[..d]);
            for i in 0..d {
                raw[i][j] += w * flux[i];
            }
        }
    });
    let mut a_hat = Tensor::zeros(d);
    let mut asymmetry: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            asymmetry = asymmetry.max((raw[i][j] - raw[j][i]).abs());
            a_hat.set(i, j, 0.5 * (raw[i][j] + raw[j][i]));
        }
    }
    HomogenizedTensor { a_hat, asymmetry }
}

/// `b_ij = A_hat_ij - a_ij - a_ik d_k chi_j` tabulated at the Gauss points
/// of every cell element (element-major, then quadrature order).
#[derive(Clone, Debug)]
pub struct BField {
    dim: usize,
    points_per_element: usize,
    values: Vec<[[f64; MAX_DIM]; MAX_DIM]>,
    weights: Vec<f64>,
}

impl BField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn points_per_element(&self) -> usize {
        self.points_per_element
    }

    /// `b_ij` at quadrature point `q`.
    pub fn get(&self, q: usize, i: usize, j: usize) -> f64 {
        self.values[q][i][j]
    }

    /// Quadrature mean of `b_ij` over the cell.
    pub fn mean(&self, i: usize, j: usize) -> f64 {
        self.values.iter().zip(&self.weights).map(|(b, w)| w * b[i][j]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        let d = self.dim;
        self.values
            .iter()
            .flat_map(|b| (0..d).flat_map(move |i| (0..d).map(move |j| b[i][j].abs())))
            .fold(0.0, f64::max)
    }
}

pub fn b_field(field: &CoefficientField, correctors: &CorrectorSet, a_hat: &HomogenizedTensor) -> BField {
    let d = correctors.grid.dim();
    let mut values = Vec::new();
    let mut weights = Vec::new();
    for_each_gauss(field, correctors, |_, _, w, a, grads| {
        let mut b = [[0.0; MAX_DIM]; MAX_DIM];
        for j in 0..d {
            let mut col = [0.0; MAX_DIM];
            col[..d].copy_from_slice(&grads[j][..d]);
            col[j] += 1.0;
            let flux = a.apply(&col[..d]);
            for i in 0..d {
                b[i][j] = a_hat.a_hat.get(i, j) - flux[i];
            }
        }
        values.push(b);
        weights.push(w);
    });
    BField { dim: d, points_per_element: 1 << d, values, weights }
}

/// Nodal flux corrector `F_kij = d_k f_ij - d_i f_kj`, where `Delta f_ij = b_ij`
/// on the torus and derivatives are recovered at nodes by averaging.
#[derive(Clone, Debug)]
pub struct FluxCorrector {
    grid: TorusGrid,
    /// Indexed `[(k * d + i) * d + j]`.
    f: Vec<Vec<f64>>,
}

impl FluxCorrector {
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn component(&self, k: usize, i: usize, j: usize) -> &[f64] {
        let d = self.grid.dim();
        &self.f[(k * d + i) * d + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.f.iter().flatten().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `max |F_kij + F_ikj|` over all nodes and indices.
    pub fn antisymmetry_defect(&self) -> f64 {
        let d = self.grid.dim();
        let mut m: f64 = 0.0;
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let a = self.component(k, i, j);
                    let b = self.component(i, k, j);
                    for (x, y) in a.iter().zip(b) {
                        m = m.max((x + y).abs());
                    }
                }
            }
        }
        m
    }
}

/// `int b phi_p` for a tabulated scalar at the Gauss points.
fn gauss_load(grid: &TorusGrid, samples: impl Fn(usize) -> f64) -> Vec<f64> {
    let d = grid.dim();
    let quad = Quadrature::gauss2(d);
    let w = quad.element_weights(grid.h());
    let vals: Vec<_> = quad.points().iter().map(|xi| shape_values(d, &xi[..d])).collect();
    let mut load = vec![0.0; grid.num_dofs()];
    for e in 0..grid.num_elements() {
        let dofs = grid.element_dofs(e);
        for g in 0..quad.len() {
            let s = samples(e * quad.len() + g) * w[g];
            for b in 0..(1 << d) {
                load[dofs[b]] += s * vals[g][b];
            }
        }
    }
    load
}

/// Nodal gradient on the torus by averaging element gradients at each node.
fn torus_nodal_gradient(grid: &TorusGrid, u: &[f64]) -> Vec<[f64; MAX_DIM]> {
    let d = grid.dim();
    let mut acc = vec![[0.0; MAX_DIM]; grid.num_dofs()];
    let mut cnt = vec![0u32; grid.num_dofs()];
    for e in 0..grid.num_elements() {
        let dofs = grid.element_dofs(e);
        for b in 0..(1 << d) {
            let mut xi = [0.0; MAX_DIM];
            for k in 0..d {
                xi[k] = ((b >> k) & 1) as f64;
            }
            let g = torus_gradient(grid, u, e, &xi[..d]);
            for k in 0..d {
                acc[dofs[b]][k] += g[k];
            }
            cnt[dofs[b]] += 1;
        }
    }
    for (a, c) in acc.iter_mut().zip(&cnt) {
        for v in a.iter_mut().take(d) {
            *v /= *c as f64;
        }
    }
    acc
}

pub fn flux_corrector(correctors: &CorrectorSet, b: &BField, tol: f64) -> Result<FluxCorrector> {
    let grid = &correctors.grid;
    let d = grid.dim();
    let lap = assemble_stiffness_torus(&CoefficientField::constant(d, 1.0), grid);
    let mut loads = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            // weak form of Delta f = b: -int grad f . grad v = int b v
            let mut l = gauss_load(grid, |q| -b.get(q, i, j));
            let mean = l.iter().sum::<f64>() / l.len() as f64;
            l.iter_mut().for_each(|v| *v -= mean);
            loads.push(l);
        }
    }
    let f = if loads.iter().all(|l| l.iter().all(|v| v.abs() < 1e-300)) {
        vec![vec![0.0; grid.num_dofs()]; d * d]
    } else {
        solve_pinned(&lap, &loads, tol)?
    };
    let grads: Vec<Vec<[f64; MAX_DIM]>> = f.iter().map(|fij| torus_nodal_gradient(grid, fij)).collect();
    let nn = grid.num_dofs();
    let mut out = vec![vec![0.0; nn]; d * d * d];
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                let gij = &grads[i * d + j];
                let gkj = &grads[k * d + j];
                let dst = &mut out[(k * d + i) * d + j];
                for p in 0..nn {
                    dst[p] = gij[p][k] - gkj[p][i];
                }
            }
        }
    }
    Ok(FluxCorrector { grid: grid.clone(), f: out })
}

/// Relative defect of `sum_k int F_kij d_k v = -int b_ij v` over all nodal test
/// functions `v`. The residual functional is measured in the lumped-mass dual
/// norm `(sum_p r_p^2 / h^d)^(1/2)`, summed over `(i, j)` in the Frobenius
/// sense and divided by `||b||_{L2}`.
pub fn weak_divergence_residual(flux: &FluxCorrector, b: &BField) -> f64 {
    let grid = &flux.grid;
    let d = grid.dim();
    let h = grid.h();
    let quad = Quadrature::gauss2(d);
    let w = quad.element_weights(h);
    let vals: Vec<_> = quad.points().iter().map(|xi| shape_values(d, &xi[..d])).collect();
    let grads: Vec<_> = quad.points().iter().map(|xi| shape_gradients(d, &xi[..d], h)).collect();
    let cell_volume = h.powi(d as i32);
    let mut res_sq = 0.0;
    let mut b_sq = 0.0;
    for i in 0..d {
        for j in 0..d {
            b_sq += b.values.iter().zip(&b.weights).map(|(v, w)| w * v[i][j] * v[i][j]).sum::<f64>();
            let mut res = gauss_load(grid, |q| b.get(q, i, j));
            for e in 0..grid.num_elements() {
                let dofs = grid.element_dofs(e);
                for g in 0..quad.len() {
                    // F_kij at the Gauss point, interpolated from nodes
                    let mut fk = [0.0; MAX_DIM];
                    for (k, fkv) in fk.iter_mut().enumerate().take(d) {
                        let comp = flux.component(k, i, j);
                        *fkv = (0..(1 << d)).map(|bb| comp[dofs[bb]] * vals[g][bb]).sum();
                    }
                    for bb in 0..(1 << d) {
                        let mut s = 0.0;
                        for k in 0..d {
                            s += fk[k] * grads[g][bb][k];
                        }
                        res[dofs[bb]] += w[g] * s;
                    }
                }
            }
            res_sq += res.iter().map(|r| r * r).sum::<f64>() / cell_volume;
        }
    }
    if b_sq > 0.0 {
        (res_sq / b_sq).sqrt()
    } else {
        res_sq.sqrt()
    }
}

/// Writes `i,j,a_hat_ij` rows (one-based indices).
pub fn write_homogenized_csv<W: Write>(mut out: W, a_hat: &HomogenizedTensor) -> std::io::Result<()> {
    writeln!(out, "i,j,a_hat_ij")?;
    let d = a_hat.a_hat.dim();
    for i in 0..d {
        for j in 0..d {
            writeln!(out, "{},{},{:.16e}", i + 1, j + 1, a_hat.a_hat.get(i, j))?;
        }
    }
    Ok(())
}

/// Writes nodal values of `chi_j` as `y1,y2,value` rows (two-dimensional cells).
pub fn write_corrector_csv<W: Write>(mut out: W, correctors: &CorrectorSet, j: usize) -> std::io::Result<()> {
    writeln!(out, "y1,y2,value")?;
    let grid = &correctors.grid;
    for (p, v) in correctors.chi[j].iter().enumerate() {
        let y = grid.node_coords(p);
        writeln!(out, "{:.16e},{:.16e},{:.16e}", y[0], y[1], v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_has_no_correctors() {
        let f = CoefficientField::constant(2, 2.5);
        let g = TorusGrid::new(2, 16).unwrap();
        let c = solve_correctors(&f, &g, 1e-10).unwrap();
        assert_eq!(c.max_abs(), 0.0);
        let a = homogenized_tensor(&f, &c);
        assert!(a.a_hat.max_abs_diff(&Tensor::scalar(2, 2.5)) < 1e-13);
        let b = b_field(&f, &c, &a);
        assert!(b.max_abs() < 1e-13);
        let fc = flux_corrector(&c, &b, 1e-10).unwrap();
        assert_eq!(fc.max_abs(), 0.0);
    }

    #[test]
    fn laminate_transverse_corrector_vanishes_and_longitudinal_is_one_dimensional() {
        let f = CoefficientField::laminate_sine(2, 1.0, 0.5);
        let g = TorusGrid::new(2, 64).unwrap();
        let c = solve_correctors(&f, &g, 1e-11).unwrap();
        assert!(c.chi(1).iter().all(|v| v.abs() < 1e-12));
        let n = g.n();
        let chi = c.chi(0);
        for i in 0..n {
            let first = chi[g.node_index(&[i, 0])];
            for j in 1..n {
                assert!((chi[g.node_index(&[i, j])] - first).abs() <= 1e-10);
            }
        }
        for j in 0..2 {
            assert!(c.mean(j).abs() < 1e-12);
        }
    }

    #[test]
    fn laminate_harmonic_and_arithmetic_means() {
        let f = CoefficientField::laminate_sine(2, 1.0, 0.5);
        let g = TorusGrid::new(2, 128).unwrap();
        let c = solve_correctors(&f, &g, 1e-11).unwrap();
        let a = homogenized_tensor(&f, &c);
        assert!((a.a_hat.get(0, 0) - 0.75f64.sqrt()).abs() < 1e-4);
        assert!((a.a_hat.get(1, 1) - 1.0).abs() < 1e-12);
        assert!(a.a_hat.get(0, 1).abs() < 1e-12);
    }

    #[test]
    fn product_field_b_has_zero_mean_and_f_is_antisymmetric() {
        let f = CoefficientField::product_sine(2, 1.0, 0.5);
        let g = TorusGrid::new(2, 32).unwrap();
        let c = solve_correctors(&f, &g, 1e-11).unwrap();
        let a = homogenized_tensor(&f, &c);
        assert!(a.asymmetry < 1e-10);
        let b = b_field(&f, &c, &a);
        for i in 0..2 {
            for j in 0..2 {
                assert!(b.mean(i, j).abs() < 1e-8);
            }
        }
        let fc = flux_corrector(&c, &b, 1e-11).unwrap();
        assert_eq!(fc.antisymmetry_defect(), 0.0);
        assert!(fc.max_abs().is_finite() && fc.max_abs() > 0.0);
    }

    #[test]
    fn voigt_reuss_bounds_for_product_field() {
        let f = CoefficientField::product_sine(2, 1.0, 0.5);
        let g = TorusGrid::new(2, 32).unwrap();
        let c = solve_correctors(&f, &g, 1e-11).unwrap();
        let a = homogenized_tensor(&f, &c);
        // arithmetic mean is 1; harmonic mean of 1 + 0.5 s t is below 1
        let s = 256;
        let mut inv = 0.0;
        for p in 0..s {
            for q in 0..s {
                let y = [(p as f64 + 0.5) / s as f64, (q as f64 + 0.5) / s as f64];
                inv += 1.0 / f.evaluate_scalar(&y).unwrap();
            }
        }
        let harmonic = (s * s) as f64 / inv;
        for i in 0..2 {
            let v = a.a_hat.get(i, i);
            assert!(v >= harmonic - 1e-6 && v <= 1.0 + 1e-12, "{v} vs [{harmonic}, 1]");
        }
    }

    #[test]
    fn csv_layout() {
        let a = HomogenizedTensor { a_hat: Tensor::identity(2), asymmetry: 0.0 };
        let mut buf = Vec::new();
        write_homogenized_csv(&mut buf, &a).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "i,j,a_hat_ij");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("1,1,1.0000000000000000e0"));
    }
}
