//! Parameter sweeps: eigenvalue gaps between the oscillating and homogenized
//! operators, boundary flux sweeps, corrector error studies, slope fits and
//! Weyl envelopes.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::boundary::{boundary_flux, boundary_layer_energy, FluxRecord, Regime};
use crate::coefficient::{CoefficientField, Tensor};
use crate::domain::{
    corrector_approximation, dirichlet_corrector, eigen_spectrum, solve_source, ApproximationReport, Operator,
};
use crate::error::{Error, Result};
use crate::linalg::EigenOptions;
use crate::mesh::DomainGrid;

/// How the domain mesh follows `eps`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshRule {
    /// The same number of cells per axis for every `eps`.
    Fixed(usize),
    /// `n = cells / eps` cells per axis, i.e. `h = eps / cells`.
    EpsOver(usize),
}

impl MeshRule {
    pub fn cells(&self, eps: f64) -> usize {
        match *self {
            MeshRule::Fixed(n) => n,
            MeshRule::EpsOver(c) => (c as f64 / eps).round() as usize,
        }
    }
}

/// Least-squares line through `(log x, log y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput("xs and ys differ in length".into()));
    }
    if xs.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: xs.len() });
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput("log-log fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(FitResult { slope, intercept, r_squared, n_points: xs.len() })
}

/// Envelope of `lambda_k / k^(2/d)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeylEnvelope {
    pub min: f64,
    pub max: f64,
    /// Set when `max / min > 25`.
    pub flagged: bool,
}

impl WeylEnvelope {
    pub fn ratio(&self) -> f64 {
        self.max / self.min
    }
}

/// `eigenvalues` sorted ascending, index `k` one-based.
pub fn weyl_check(eigenvalues: &[f64], d: usize) -> Result<WeylEnvelope> {
    if eigenvalues.len() < 5 {
        return Err(Error::TooFewPoints { needed: 5, got: eigenvalues.len() });
    }
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    let exp = 2.0 / d as f64;
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, l) in eigenvalues.iter().enumerate() {
        let v = l / ((i + 1) as f64).powf(exp);
        min = min.min(v);
        max = max.max(v);
    }
    Ok(WeylEnvelope { min, max, flagged: max / min > 25.0 })
}

/// One `(eps, k)` comparison of the oscillating and homogenized spectra.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapRecord {
    pub eps: f64,
    /// One-based.
    pub k: usize,
    pub lambda_eps: f64,
    pub lambda_0: f64,
    /// `|lambda_eps - lambda_0|`.
    pub gap: f64,
    /// `gap / (eps lambda_0^(3/2))`.
    pub ratio_thm_a: f64,
    /// `gap / (eps lambda_0^2)`.
    pub ratio_l2: f64,
    /// Estimated discretization error of `gap`.
    pub fem_error: f64,
    /// `fem_error <= 0.1 gap`.
    pub resolved: bool,
}

impl GapRecord {
    fn new(eps: f64, k: usize, lambda_eps: f64, lambda_0: f64, fem_error: f64) -> Self {
        let gap = (lambda_eps - lambda_0).abs();
        Self {
            eps,
            k,
            lambda_eps,
            lambda_0,
            gap,
            ratio_thm_a: gap / (eps * lambda_0.powf(1.5)),
            ratio_l2: gap / (eps * lambda_0 * lambda_0),
            fem_error,
            resolved: fem_error <= 0.1 * gap,
        }
    }

    /// `gap / (eps lambda_0)`.
    pub fn ratio_linear(&self) -> f64 {
        self.gap / (self.eps * self.lambda_0)
    }
}

/// A sweep entry that could not be computed.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepFailure {
    pub eps: f64,
    pub message: String,
}

#[derive(Clone, Debug, Default)]
pub struct GapSweep {
    pub records: Vec<GapRecord>,
    pub failures: Vec<SweepFailure>,
}

#[derive(Clone, Debug)]
pub struct GapSweepOptions {
    pub k_max: usize,
    pub mesh: MeshRule,
    pub eig: EigenOptions,
    /// Extrapolate from meshes `h, 2h, 4h`; otherwise use `h` alone and
    /// estimate its error from `2h`.
    pub richardson: bool,
}

impl Default for GapSweepOptions {
    fn default() -> Self {
        Self { k_max: 20, mesh: MeshRule::EpsOver(16), eig: EigenOptions::default(), richardson: true }
    }
}

/// Eigenvalues of the homogenized operator by mesh size, shared across a sweep.
#[derive(Clone, Debug)]
pub struct HomogenizedSpectra {
    a_hat: Tensor,
    count: usize,
    cache: Arc<Mutex<HashMap<usize, Arc<Vec<f64>>>>>,
}

impl HomogenizedSpectra {
    pub fn new(a_hat: Tensor, count: usize) -> Self {
        Self { a_hat, count, cache: Arc::new(Mutex::new(HashMap::new())) }
    }

    pub fn a_hat(&self) -> &Tensor {
        &self.a_hat
    }

    pub fn get(&self, n: usize, opts: &EigenOptions) -> Result<Arc<Vec<f64>>> {
        if let Some(v) = self.cache.lock().expect("cache poisoned").get(&n) {
            return Ok(Arc::clone(v));
        }
        let grid = DomainGrid::new(self.a_hat.dim(), n)?;
        let pairs = eigen_spectrum(&Operator::Homogenized(self.a_hat), &grid, self.count, opts)?;
        let vals = Arc::new(pairs.into_iter().map(|p| p.lambda).collect::<Vec<_>>());
        self.cache.lock().expect("cache poisoned").insert(n, Arc::clone(&vals));
        Ok(vals)
    }

    /// Number of distinct meshes solved so far.
    pub fn cached_meshes(&self) -> usize {
        self.cache.lock().expect("cache poisoned").len()
    }
}

fn oscillating_values(field: &CoefficientField, eps: f64, n: usize, count: usize, opts: &EigenOptions) -> Result<Vec<f64>> {
    let grid = DomainGrid::new(field.dim(), n)?;
    let op = Operator::Oscillating { field: field.clone(), eps };
    Ok(eigen_spectrum(&op, &grid, count, opts)?.into_iter().map(|p| p.lambda).collect())
}

fn richardson(fine: f64, coarse: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// Gap records for one `eps`.
pub fn gap_records_for_eps(
    field: &CoefficientField,
    eps: f64,
    homogenized: &HomogenizedSpectra,
    opts: &GapSweepOptions,
) -> Result<Vec<GapRecord>> {
    let n = opts.mesh.cells(eps);
    let count = opts.k_max;
    if n % 4 != 0 || n < 8 {
        return Err(Error::InvalidInput(format!("mesh with {n} cells cannot be coarsened twice")));
    }
    if homogenized.count < count {
        return Err(Error::InvalidInput("homogenized cache holds too few eigenvalues".into()));
    }
    let le_h = oscillating_values(field, eps, n, count, &opts.eig)?;
    let le_2h = oscillating_values(field, eps, n / 2, count, &opts.eig)?;
    let l0_h = homogenized.get(n, &opts.eig)?;
    let l0_2h = homogenized.get(n / 2, &opts.eig)?;
    let (le_4h, l0_4h) = if opts.richardson {
        (oscillating_values(field, eps, n / 4, count, &opts.eig)?, homogenized.get(n / 4, &opts.eig)?)
    } else {
        (Vec::new(), Arc::new(Vec::new()))
    };
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let rec = if opts.richardson {
            let le = richardson(le_h[k], le_2h[k]);
            let l0 = richardson(l0_h[k], l0_2h[k]);
            let le_c = richardson(le_2h[k], le_4h[k]);
            let l0_c = richardson(l0_2h[k], l0_4h[k]);
            // extrapolated values converge at fourth order
            let err = ((le - l0) - (le_c - l0_c)).abs() / 15.0;
            GapRecord::new(eps, k + 1, le, l0, err)
        } else {
            let err = ((le_h[k] - l0_h[k]) - (le_2h[k] - l0_2h[k])).abs() / 3.0;
            GapRecord::new(eps, k + 1, le_h[k], l0_h[k], err)
        };
        out.push(rec);
    }
    Ok(out)
}

/// Runs [`gap_records_for_eps`] for every `eps`; failures are collected, not fatal.
pub fn gap_sweep(
    field: &CoefficientField,
    eps_list: &[f64],
    a_hat: &Tensor,
    opts: &GapSweepOptions,
) -> Result<GapSweep> {
    check_eps_list(eps_list)?;
    let homogenized = HomogenizedSpectra::new(*a_hat, opts.k_max);
    let mut sweep = GapSweep::default();
    for &eps in eps_list {
        match gap_records_for_eps(field, eps, &homogenized, opts) {
            Ok(recs) => sweep.records.extend(recs),
            Err(e) => sweep.failures.push(SweepFailure { eps, message: e.to_string() }),
        }
    }
    sort_gap_records(&mut sweep.records);
    Ok(sweep)
}

/// Deterministic order: `eps` descending, then `k`.
pub fn sort_gap_records(records: &mut [GapRecord]) {
    records.sort_by(|a, b| b.eps.total_cmp(&a.eps).then(a.k.cmp(&b.k)));
}

fn check_eps_list(eps_list: &[f64]) -> Result<()> {
    if eps_list.is_empty() {
        return Err(Error::InvalidInput("empty eps list".into()));
    }
    if eps_list.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidInput("eps values must be positive".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("eps list must be strictly decreasing".into()));
    }
    Ok(())
}

/// Aggregates over the flux records of one regime.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeSummary {
    pub regime: Regime,
    pub count: usize,
    pub min_flux_over_lambda: f64,
    pub max_flux_over_lambda: f64,
    pub min_flux_over_lambda_1p5: f64,
    pub max_flux_over_lambda_1p5: f64,
    /// Largest `flux / (lambda (1 + eps lambda))`.
    pub max_flux_over_refined: f64,
}

pub fn summarize_regime(records: &[FluxRecord], regime: Regime) -> Option<RegimeSummary> {
    let sel: Vec<&FluxRecord> = records.iter().filter(|r| r.regime == regime).collect();
    if sel.is_empty() {
        return None;
    }
    let fold = |f: &dyn Fn(&FluxRecord) -> f64| {
        sel.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(f(r)), hi.max(f(r))))
    };
    let (a, b) = fold(&|r| r.flux_over_lambda);
    let (c, d) = fold(&|r| r.flux_over_lambda_1p5());
    let (_, e) = fold(&|r| r.flux_over_refined());
    Some(RegimeSummary {
        regime,
        count: sel.len(),
        min_flux_over_lambda: a,
        max_flux_over_lambda: b,
        min_flux_over_lambda_1p5: c,
        max_flux_over_lambda_1p5: d,
        max_flux_over_refined: e,
    })
}

#[derive(Clone, Debug, Default)]
pub struct FluxSweep {
    pub records: Vec<FluxRecord>,
    pub failures: Vec<SweepFailure>,
    pub summaries: Vec<RegimeSummary>,
}

/// Boundary fluxes of the first `k_max` eigenfunctions of `L_eps` for each `eps`.
pub fn flux_records_for_eps(
    field: &CoefficientField,
    eps: f64,
    k_max: usize,
    mesh: MeshRule,
    eig: &EigenOptions,
) -> Result<Vec<FluxRecord>> {
    let grid = DomainGrid::new(field.dim(), mesh.cells(eps))?;
    let op = Operator::Oscillating { field: field.clone(), eps };
    let pairs = eigen_spectrum(&op, &grid, k_max, eig)?;
    pairs
        .iter()
        .enumerate()
        .map(|(i, p)| boundary_flux(&p.vector, &op, p.lambda, None, i + 1, &grid))
        .collect()
}

/// Boundary-layer energy of one eigenfunction for one layer width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerRecord {
    pub eps: f64,
    pub k: usize,
    pub lambda: f64,
    pub c_layer: f64,
    /// `(1/eps) int_{dist < c eps} |grad u|^2` for the mass-normalized eigenfunction.
    pub energy: f64,
}

impl LayerRecord {
    pub fn energy_over_lambda(&self) -> f64 {
        self.energy / self.lambda
    }
}

/// Like [`flux_records_for_eps`], and also evaluates the layer energy of every
/// eigenfunction at each width in `c_layers`. Widths that are thinner than the
/// mesh or reach the center of the square are skipped.
pub fn flux_and_layer_records_for_eps(
    field: &CoefficientField,
    eps: f64,
    k_max: usize,
    mesh: MeshRule,
    eig: &EigenOptions,
    c_layers: &[f64],
) -> Result<(Vec<FluxRecord>, Vec<LayerRecord>)> {
    let grid = DomainGrid::new(field.dim(), mesh.cells(eps))?;
    let op = Operator::Oscillating { field: field.clone(), eps };
    let pairs = eigen_spectrum(&op, &grid, k_max, eig)?;
    let mut flux = Vec::with_capacity(pairs.len());
    let mut layers = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        flux.push(boundary_flux(&p.vector, &op, p.lambda, None, i + 1, &grid)?);
        for &c in c_layers {
            match boundary_layer_energy(&p.vector, eps, c, &grid) {
                Ok(energy) => layers.push(LayerRecord { eps, k: i + 1, lambda: p.lambda, c_layer: c, energy }),
                Err(Error::EmptyLayer { .. } | Error::InvalidInput(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok((flux, layers))
}

pub fn flux_sweep(
    field: &CoefficientField,
    eps_list: &[f64],
    k_max: usize,
    mesh: MeshRule,
    eig: &EigenOptions,
) -> Result<FluxSweep> {
    check_eps_list(eps_list)?;
    let mut sweep = FluxSweep::default();
    for &eps in eps_list {
        match flux_records_for_eps(field, eps, k_max, mesh, eig) {
            Ok(r) => sweep.records.extend(r),
            Err(e) => sweep.failures.push(SweepFailure { eps, message: e.to_string() }),
        }
    }
    finish_flux_sweep(&mut sweep);
    Ok(sweep)
}

/// Sorts records by `(eps desc, k)` and recomputes the regime summaries.
pub fn finish_flux_sweep(sweep: &mut FluxSweep) {
    sweep.records.sort_by(|a, b| b.eps.total_cmp(&a.eps).then(a.k.cmp(&b.k)));
    sweep.summaries = [Regime::Eps2LambdaLt1, Regime::Eps2LambdaGe1]
        .into_iter()
        .filter_map(|r| summarize_regime(&sweep.records, r))
        .collect();
}

/// One row of the corrector error study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrectorStudyRow {
    pub report: ApproximationReport,
    /// `max_j sup |Phi_j - x_j|`.
    pub deviation_sup: f64,
}

/// For each `eps`: solves `L_eps u = f`, `L_0 u = f` and the Dirichlet
/// correctors on the same mesh, and measures the first-order approximation.
pub fn corrector_study<F>(
    field: &CoefficientField,
    eps_list: &[f64],
    a_hat: &Tensor,
    mesh: MeshRule,
    f: F,
    tol: f64,
) -> Result<Vec<CorrectorStudyRow>>
where
    F: Fn(&[f64]) -> f64,
{
    check_eps_list(eps_list)?;
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let grid = DomainGrid::new(field.dim(), mesh.cells(eps))?;
        let fv = grid.interpolate(&f);
        let op = Operator::Oscillating { field: field.clone(), eps };
        let u_eps = solve_source(&op, &fv, &grid, tol)?;
        let u_0 = solve_source(&Operator::Homogenized(*a_hat), &fv, &grid, tol)?;
        let corr = dirichlet_corrector(field, eps, &grid, tol)?;
        let report = corrector_approximation(&u_eps, &u_0, &corr, &fv, &grid)?;
        let deviation_sup = corr.deviation_sup.iter().copied().fold(0.0, f64::max);
        rows.push(CorrectorStudyRow { report, deviation_sup });
    }
    Ok(rows)
}

/// Gnuplot script for `gaps.csv`: gap against `eps` on log axes, one curve per `k`.
pub fn gap_plot_script(csv: &str, ks: &[usize]) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\nset logscale xy\nset key left top\n");
    s.push_str("set xlabel 'eps'\nset ylabel 'gap'\nset term pngcairo size 900,600\n");
    s.push_str("set output 'gap_vs_eps.png'\n");
    let curves: Vec<String> = ks
        .iter()
        .map(|k| format!("'{csv}' using ($2=={k}?$1:1/0):5 with linespoints title 'k={k}'"))
        .collect();
    s.push_str(&format!("plot {}\n", curves.join(", \\\n     ")));
    s
}

/// Gnuplot script for `gaps.csv`: `ratio_thm_a` and `ratio_l2` against `k` at one `eps`.
pub fn ratio_plot_script(csv: &str, eps: f64) -> String {
    format!(
        "set datafile separator ','\nset logscale y\nset xlabel 'k'\nset ylabel 'ratio'\n\
         set term pngcairo size 900,600\nset output 'ratio_vs_k.png'\n\
         plot '{csv}' using (abs($1-{eps:e})<1e-12?$2:1/0):6 with linespoints title 'gap/(eps lambda^1.5)', \\\n     \
         '{csv}' using (abs($1-{eps:e})<1e-12?$2:1/0):7 with linespoints title 'gap/(eps lambda^2)'\n"
    )
}

/// Gnuplot script for `flux.csv`: flux against lambda on log axes.
pub fn flux_plot_script(csv: &str) -> String {
    format!(
        "set datafile separator ','\nset logscale xy\nset xlabel 'lambda'\nset ylabel 'boundary flux'\n\
         set term pngcairo size 900,600\nset output 'flux_vs_lambda.png'\n\
         plot '{csv}' using 3:4 with points title 'flux', 4*x with lines title '4 lambda'\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn slope_of_power_laws() {
        let xs = [0.125, 0.0625, 0.03125, 0.015625];
        let lin: Vec<f64> = xs.iter().map(|x| 3.0 * x).collect();
        let quad: Vec<f64> = xs.iter().map(|x| 0.5 * x * x).collect();
        assert!((fit_loglog_slope(&xs, &lin).unwrap().slope - 1.0).abs() < 1e-12);
        let f = fit_loglog_slope(&xs, &quad).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(f.n_points, 4);
    }

    #[test]
    fn slope_of_tabulated_data() {
        // reference slope from an independent least-squares fit
        let xs = [0.125, 0.0625, 0.03125, 0.015625];
        let ys = [3.1, 1.6, 0.81, 0.40];
        let f = fit_loglog_slope(&xs, &ys).unwrap();
        assert!((f.slope - 0.984_466_7).abs() < 1e-6, "{}", f.slope);
    }

    #[test]
    fn fit_rejects_bad_data() {
        assert!(fit_loglog_slope(&[1.0, 2.0, 3.0], &[1.0, -1.0, 2.0]).is_err());
        assert!(matches!(fit_loglog_slope(&[1.0, 2.0], &[1.0, 2.0]), Err(Error::TooFewPoints { .. })));
    }

    fn square_laplacian(count: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (1..=10).flat_map(|m| (1..=10).map(move |n| PI * PI * (m * m + n * n) as f64)).collect();
        v.sort_by(f64::total_cmp);
        v.truncate(count);
        v
    }

    #[test]
    fn weyl_envelope_of_square() {
        let env = weyl_check(&square_laplacian(20), 2).unwrap();
        assert!(env.ratio() <= 4.0, "{}", env.ratio());
        assert!(!env.flagged);
        assert!(matches!(weyl_check(&square_laplacian(1), 2), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn constant_field_gaps_vanish() {
        let field = CoefficientField::constant(2, 1.0);
        let opts = GapSweepOptions { k_max: 4, mesh: MeshRule::EpsOver(16), ..Default::default() };
        let sweep = gap_sweep(&field, &[0.5, 0.25], &Tensor::identity(2), &opts).unwrap();
        assert!(sweep.failures.is_empty());
        assert_eq!(sweep.records.len(), 8);
        for r in &sweep.records {
            assert!(r.gap <= 1e-8 * r.lambda_0, "{r:?}");
        }
    }

    #[test]
    fn homogenized_cache_reuses_meshes() {
        let cache = HomogenizedSpectra::new(Tensor::identity(2), 3);
        let opts = EigenOptions::default();
        let a = cache.get(16, &opts).unwrap();
        let b = cache.get(16, &opts).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.cached_meshes(), 1);
    }

    #[test]
    fn eps_list_must_decrease() {
        let field = CoefficientField::constant(2, 1.0);
        let opts = GapSweepOptions::default();
        assert!(gap_sweep(&field, &[0.25, 0.5], &Tensor::identity(2), &opts).is_err());
    }

    #[test]
    fn constant_field_flux_sweep() {
        let field = CoefficientField::constant(2, 1.0);
        let sweep = flux_sweep(&field, &[1.0 / 8.0], 4, MeshRule::EpsOver(16), &EigenOptions::default()).unwrap();
        for r in &sweep.records {
            assert!((r.flux_over_lambda - 4.0).abs() < 0.04, "{r:?}");
        }
        // 8 pi^2 / 64 > 1 puts the fourth mode above the critical scaling
        assert_eq!(sweep.records[3].regime, Regime::Eps2LambdaGe1);
        assert_eq!(sweep.records[0].regime, Regime::Eps2LambdaLt1);
        let counts: usize = sweep.summaries.iter().map(|s| s.count).sum();
        assert_eq!(counts, 4);
    }

    #[test]
    fn plot_scripts_reference_their_csv() {
        assert!(gap_plot_script("gaps.csv", &[1, 5]).contains("'gaps.csv'"));
        assert!(ratio_plot_script("gaps.csv", 0.03125).contains("ratio_vs_k.png"));
        assert!(flux_plot_script("flux.csv").contains("4*x"));
    }
}
