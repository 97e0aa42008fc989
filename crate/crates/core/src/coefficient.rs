//! Periodic coefficient fields `y -> A(y)` on the unit cell.
//!
//! All builtin fields are scalar multiples of the identity and smooth, so
//! they are Lipschitz and admit analytic gradients. Anisotropic or
//! tabulated fields go through [`CoefficientField::custom`].

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Largest spatial dimension supported by the fixed-size tensor storage.
pub const MAX_DIM: usize = 3;

/// Small dense symmetric matrix of size `dim x dim` (`dim <= 3`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tensor {
    dim: usize,
    m: [[f64; MAX_DIM]; MAX_DIM],
}

impl Tensor {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} out of range");
        Self { dim, m: [[0.0; MAX_DIM]; MAX_DIM] }
    }

    pub fn scalar(dim: usize, value: f64) -> Self {
        let mut t = Self::zeros(dim);
        for i in 0..dim {
            t.m[i][i] = value;
        }
        t
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, 1.0)
    }

    /// Builds a tensor from row-major entries; `rows.len()` is the dimension.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        let mut t = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim, "tensor rows must be square");
            for (j, v) in row.iter().enumerate() {
                t.m[i][j] = *v;
            }
        }
        t
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.m[i][j] = v;
    }

    /// `A xi` for a vector of length `dim`.
    #[inline]
    pub fn apply(&self, xi: &[f64]) -> [f64; MAX_DIM] {
        let mut out = [0.0; MAX_DIM];
        for i in 0..self.dim {
            let mut s = 0.0;
            for j in 0..self.dim {
                s += self.m[i][j] * xi[j];
            }
            out[i] = s;
        }
        out
    }

    /// `xi . A eta`.
    #[inline]
    pub fn bilinear(&self, xi: &[f64], eta: &[f64]) -> f64 {
        let a_eta = self.apply(eta);
        (0..self.dim).map(|i| xi[i] * a_eta[i]).sum()
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                d = d.max((self.m[i][j] - other.m[i][j]).abs());
            }
        }
        d
    }

    /// `max |a_ij - a_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..i {
                d = d.max((self.m[i][j] - self.m[j][i]).abs());
            }
        }
        d
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.dim;
        let mut a = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = 0.5 * (self.m[i][j] + self.m[j][i]);
            }
        }
        // cyclic Jacobi; at most 3x3 so a handful of sweeps suffice
        for _ in 0..64 {
            let mut off = 0.0;
            for i in 0..n {
                for j in 0..i {
                    off += a[i][j] * a[i][j];
                }
            }
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        ev.sort_by(|x, y| x.total_cmp(y));
        ev
    }
}

/// Builtin catalogue entries plus a closure-backed escape hatch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    /// `A = mu I`.
    Constant,
    /// `A = mu (1 + r sin 2 pi y_1) I`.
    LaminateSine,
    /// `A = mu (1 + r sin 2 pi y_1 sin 2 pi y_2) I`.
    ProductSine,
    /// `A = mu / (1 + r sin 2 pi y_1) I`; harmonic mean is exactly `mu`.
    ReciprocalSine,
    Custom,
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FieldKind::Constant => "constant",
            FieldKind::LaminateSine => "laminate_sine",
            FieldKind::ProductSine => "product_sine",
            FieldKind::ReciprocalSine => "reciprocal_sine",
            FieldKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

impl FromStr for FieldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(FieldKind::Constant),
            "laminate_sine" => Ok(FieldKind::LaminateSine),
            "product_sine" => Ok(FieldKind::ProductSine),
            "reciprocal_sine" => Ok(FieldKind::ReciprocalSine),
            "custom" => Ok(FieldKind::Custom),
            other => Err(Error::InvalidInput(format!("unknown coefficient kind `{other}`"))),
        }
    }
}

type CustomFn = Arc<dyn Fn(&[f64]) -> Tensor + Send + Sync>;

/// Symmetric, elliptic, `Z^d`-periodic coefficient field.
#[derive(Clone)]
pub struct CoefficientField {
    dim: usize,
    kind: FieldKind,
    params: Vec<f64>,
    kappa: f64,
    custom: Option<CustomFn>,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .field("params", &self.params)
            .field("kappa", &self.kappa)
            .finish()
    }
}

#[inline]
fn wrap(t: f64) -> f64 {
    t - t.floor()
}

fn sine_kappa(mu: f64, r: f64) -> f64 {
    let lo = mu * (1.0 - r.abs());
    let hi = mu * (1.0 + r.abs());
    lo.min(1.0 / hi)
}

impl CoefficientField {
    pub fn constant(dim: usize, mu: f64) -> Self {
        Self { dim, kind: FieldKind::Constant, params: vec![mu], kappa: mu.min(1.0 / mu), custom: None }
    }

    pub fn laminate_sine(dim: usize, mu: f64, r: f64) -> Self {
        Self {
            dim,
            kind: FieldKind::LaminateSine,
            params: vec![mu, r],
            kappa: sine_kappa(mu, r),
            custom: None,
        }
    }

    /// Needs `dim >= 2`.
    pub fn product_sine(dim: usize, mu: f64, r: f64) -> Self {
        assert!(dim >= 2, "product_sine needs at least two axes");
        Self {
            dim,
            kind: FieldKind::ProductSine,
            params: vec![mu, r],
            kappa: sine_kappa(mu, r),
            custom: None,
        }
    }

    pub fn reciprocal_sine(dim: usize, mu: f64, r: f64) -> Self {
        let lo = mu / (1.0 + r.abs());
        let hi = mu / (1.0 - r.abs());
        let kappa = if r.abs() < 1.0 { lo.min(1.0 / hi) } else { -1.0 };
        Self { dim, kind: FieldKind::ReciprocalSine, params: vec![mu, r], kappa, custom: None }
    }

    /// Constant tensor, e.g. a homogenized matrix.
    pub fn uniform(tensor: Tensor) -> Self {
        let ev = tensor.eigenvalues();
        let kappa = ev[0].min(1.0 / ev[ev.len() - 1]);
        let dim = tensor.dim();
        Self {
            dim,
            kind: FieldKind::Custom,
            params: Vec::new(),
            kappa,
            custom: Some(Arc::new(move |_| tensor)),
        }
    }

    /// Arbitrary periodic field. `f` receives `y` already reduced to `[0,1)^d`.
    pub fn custom<F>(dim: usize, kappa: f64, f: F) -> Self
    where
        F: Fn(&[f64]) -> Tensor + Send + Sync + 'static,
    {
        Self { dim, kind: FieldKind::Custom, params: Vec::new(), kappa, custom: Some(Arc::new(f)) }
    }

    /// Builds a builtin field from its catalogue name.
    pub fn builtin(kind: FieldKind, dim: usize, mu: f64, r: f64) -> Result<Self> {
        match kind {
            FieldKind::Constant => Ok(Self::constant(dim, mu)),
            FieldKind::LaminateSine => Ok(Self::laminate_sine(dim, mu, r)),
            FieldKind::ProductSine if dim >= 2 => Ok(Self::product_sine(dim, mu, r)),
            FieldKind::ProductSine => {
                Err(Error::InvalidInput("product_sine needs dimension >= 2".into()))
            }
            FieldKind::ReciprocalSine => Ok(Self::reciprocal_sine(dim, mu, r)),
            FieldKind::Custom => {
                Err(Error::InvalidInput("custom fields cannot be built from a name".into()))
            }
        }
    }

    /// Overrides the declared ellipticity constant.
    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Declared ellipticity constant.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// True when `A` is a scalar multiple of the identity at every point.
    pub fn is_isotropic(&self) -> bool {
        self.kind != FieldKind::Custom
    }

    /// Scalar profile for isotropic builtins, evaluated at an already wrapped point.
    #[inline]
    fn scalar_at(&self, y: &[f64]) -> f64 {
        let p = &self.params;
        match self.kind {
            FieldKind::Constant => p[0],
            FieldKind::LaminateSine => p[0] * (1.0 + p[1] * (2.0 * PI * y[0]).sin()),
            FieldKind::ProductSine => {
                p[0] * (1.0 + p[1] * (2.0 * PI * y[0]).sin() * (2.0 * PI * y[1]).sin())
            }
            FieldKind::ReciprocalSine => p[0] / (1.0 + p[1] * (2.0 * PI * y[0]).sin()),
            FieldKind::Custom => unreachable!("custom fields have no scalar profile"),
        }
    }

    /// `A(y mod 1)`.
    pub fn evaluate(&self, y: &[f64]) -> Tensor {
        debug_assert!(y.len() >= self.dim);
        let mut w = [0.0; MAX_DIM];
        for k in 0..self.dim {
            w[k] = wrap(y[k]);
        }
        let w = &w[..self.dim];
        match &self.custom {
            Some(f) => f(w),
            None => Tensor::scalar(self.dim, self.scalar_at(w)),
        }
    }

    /// Scalar value for isotropic fields; `None` for custom fields.
    pub fn evaluate_scalar(&self, y: &[f64]) -> Option<f64> {
        if self.custom.is_some() {
            return None;
        }
        let mut w = [0.0; MAX_DIM];
        for k in 0..self.dim {
            w[k] = wrap(y[k]);
        }
        Some(self.scalar_at(&w[..self.dim]))
    }

    /// `d A / d y_k` for `k < dim`. Analytic for builtins, central
    /// differences for custom fields.
    pub fn gradient(&self, y: &[f64]) -> [Tensor; MAX_DIM] {
        let d = self.dim;
        let mut out = [Tensor::zeros(d); MAX_DIM];
        if self.custom.is_some() {
            let step = 1e-6;
            let mut yp = [0.0; MAX_DIM];
            let mut ym = [0.0; MAX_DIM];
            for k in 0..d {
                yp[..d].copy_from_slice(&y[..d]);
                ym[..d].copy_from_slice(&y[..d]);
                yp[k] += step;
                ym[k] -= step;
                let ap = self.evaluate(&yp[..d]);
                let am = self.evaluate(&ym[..d]);
                let mut g = Tensor::zeros(d);
                for i in 0..d {
                    for j in 0..d {
                        g.set(i, j, (ap.get(i, j) - am.get(i, j)) / (2.0 * step));
                    }
                }
                out[k] = g;
            }
            return out;
        }
        let p = &self.params;
        let tp = 2.0 * PI;
        let mut w = [0.0; MAX_DIM];
        for k in 0..d {
            w[k] = wrap(y[k]);
        }
        let mut grad = [0.0; MAX_DIM];
        match self.kind {
            FieldKind::Constant => {}
            FieldKind::LaminateSine => grad[0] = p[0] * p[1] * tp * (tp * w[0]).cos(),
            FieldKind::ProductSine => {
                grad[0] = p[0] * p[1] * tp * (tp * w[0]).cos() * (tp * w[1]).sin();
                grad[1] = p[0] * p[1] * tp * (tp * w[0]).sin() * (tp * w[1]).cos();
            }
            FieldKind::ReciprocalSine => {
                let den = 1.0 + p[1] * (tp * w[0]).sin();
                grad[0] = -p[0] * p[1] * tp * (tp * w[0]).cos() / (den * den);
            }
            FieldKind::Custom => unreachable!(),
        }
        for k in 0..d {
            out[k] = Tensor::scalar(d, grad[k]);
        }
        out
    }

    /// Samples the field on a uniform grid and checks the structural hypotheses.
    pub fn certify(&self, samples_per_axis: usize) -> Result<CertificationReport> {
        if samples_per_axis < 2 {
            return Err(Error::InvalidInput("certify needs at least 2 samples per axis".into()));
        }
        let d = self.dim;
        let s = samples_per_axis;
        let h = 1.0 / s as f64;
        let total = s.pow(d as u32);
        let mut kappa_observed = f64::INFINITY;
        let mut symmetry_defect: f64 = 0.0;
        let mut periodicity_defect: f64 = 0.0;
        let mut lipschitz: f64 = 0.0;
        let mut y = [0.0; MAX_DIM];
        let mut shifted = [0.0; MAX_DIM];
        for flat in 0..total {
            let mut rem = flat;
            for k in 0..d {
                y[k] = (rem % s) as f64 * h;
                rem /= s;
            }
            let a = self.evaluate(&y[..d]);
            symmetry_defect = symmetry_defect.max(a.symmetry_defect());
            let ev = a.eigenvalues();
            let lo = ev[0];
            let hi = ev[d - 1];
            let k_here = if lo <= 0.0 { lo } else { lo.min(1.0 / hi) };
            kappa_observed = kappa_observed.min(k_here);
            for k in 0..d {
                shifted[..d].copy_from_slice(&y[..d]);
                shifted[k] += 1.0;
                periodicity_defect = periodicity_defect.max(a.max_abs_diff(&self.evaluate(&shifted[..d])));
                shifted[k] = y[k] + h;
                let next = self.evaluate(&shifted[..d]);
                lipschitz = lipschitz.max(a.max_abs_diff(&next) / h);
            }
        }
        if kappa_observed <= 0.0 {
            return Err(Error::NonElliptic { kappa_observed });
        }
        Ok(CertificationReport {
            kappa_observed,
            symmetry_defect,
            periodicity_defect,
            lipschitz_estimate: lipschitz,
        })
    }
}

/// Outcome of [`CoefficientField::certify`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertificationReport {
    pub kappa_observed: f64,
    pub symmetry_defect: f64,
    pub periodicity_defect: f64,
    pub lipschitz_estimate: f64,
}
