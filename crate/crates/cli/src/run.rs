//! Command dispatch, output files and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::ValueEnum;
use homolab::cell::{
    b_field, flux_corrector, homogenized_tensor, solve_correctors, weak_divergence_residual, write_corrector_csv,
    write_homogenized_csv, HomogenizedTensor,
};
use homolab::domain::{eigen_spectrum, Operator};
use homolab::experiments::{
    corrector_study, finish_flux_sweep, fit_loglog_slope, flux_and_layer_records_for_eps, flux_plot_script,
    gap_plot_script, gap_records_for_eps, ratio_plot_script, sort_gap_records, FluxSweep, GapSweepOptions,
    HomogenizedSpectra, LayerRecord, SweepFailure,
};
use homolab::export::{
    write_approx_csv, write_flux_csv, write_gaps_csv, write_layer_csv, write_oned_scan_csv, write_spectrum_csv,
};
use homolab::linalg::EigenOptions;
use homolab::onedim::{resonance_scan, OneDimProblem};
use homolab::{CoefficientField, DomainGrid, EigenPair, TorusGrid};
use rayon::prelude::*;

use crate::config::{EigOperator, RunConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Certify,
    Correctors,
    Homogenize,
    Eig,
    GapSweep,
    FluxSweep,
    H1Study,
    OnedScan,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Certify => "certify",
            Command::Correctors => "correctors",
            Command::Homogenize => "homogenize",
            Command::Eig => "eig",
            Command::GapSweep => "gap-sweep",
            Command::FluxSweep => "flux-sweep",
            Command::H1Study => "h1-study",
            Command::OnedScan => "oned-scan",
            Command::Report => "report",
        }
    }

    /// Commands that run on the 1D lab instead of the unit square.
    fn dim(self) -> usize {
        if self == Command::OnedScan {
            1
        } else {
            2
        }
    }
}

/// Why a run stopped.
#[derive(Debug)]
pub enum Failure {
    /// Bad input; exit code 1.
    Config(String),
    /// Solver or I/O failure after outputs may have been written; exit code 2.
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<homolab::Error> for Failure {
    fn from(e: homolab::Error) -> Self {
        Failure::Numerical(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numerical(format!("i/o: {e}"))
    }
}

type Outcome = Result<(), Failure>;

/// Output directory plus the list of files written so far.
struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn create<F>(&mut self, name: &str, body: F) -> Outcome
    where
        F: FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
    {
        let mut w = BufWriter::new(fs::File::create(self.dir.join(name))?);
        body(&mut w)?;
        w.flush()?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn text(&mut self, name: &str, s: &str) -> Outcome {
        self.create(name, |w| w.write_all(s.as_bytes()))
    }
}

fn build_field(cfg: &RunConfig, dim: usize) -> Result<CoefficientField, Failure> {
    let mut field = CoefficientField::builtin(cfg.coeff_kind, dim, cfg.coeff_mu, cfg.coeff_r)
        .map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(k) = cfg.coeff_kappa {
        field = field.with_kappa(k);
    }
    Ok(field)
}

fn eig_options(cfg: &RunConfig) -> EigenOptions {
    EigenOptions { tol: cfg.eig_tol, max_restarts: cfg.eig_max_iter, seed: cfg.eig_seed, ..EigenOptions::default() }
}

fn effective_tensor(field: &CoefficientField, cfg: &RunConfig) -> Result<(TorusGrid, HomogenizedTensor), Failure> {
    let grid = TorusGrid::new(field.dim(), cfg.cell_n)?;
    let chi = solve_correctors(field, &grid, cfg.tol)?;
    let a_hat = homogenized_tensor(field, &chi);
    log::info!("homogenized tensor on {}^{} cells: {:?}", cfg.cell_n, field.dim(), a_hat.a_hat);
    Ok((grid, a_hat))
}

fn pool(cfg: &RunConfig) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Failure::Numerical(format!("cannot start worker pool: {e}")))
}

fn failures_text(failures: &[SweepFailure]) -> String {
    let mut s = String::from("eps,message\n");
    for f in failures {
        let _ = writeln!(s, "{:.16e},\"{}\"", f.eps, f.message.replace('"', "'"));
    }
    s
}

fn check_failures(failures: &[SweepFailure]) -> Outcome {
    if failures.is_empty() {
        Ok(())
    } else {
        let list: Vec<String> = failures.iter().map(|f| format!("eps={}: {}", f.eps, f.message)).collect();
        Err(Failure::Numerical(list.join("; ")))
    }
}

fn certify(cfg: &RunConfig, field: &CoefficientField, out: &mut Outputs) -> Outcome {
    let rep = field.certify(cfg.certify_samples)?;
    out.create("certify.csv", |w| {
        writeln!(w, "quantity,value")?;
        writeln!(w, "kappa_observed,{:.16e}", rep.kappa_observed)?;
        writeln!(w, "kappa_declared,{:.16e}", field.kappa())?;
        writeln!(w, "symmetry_defect,{:.16e}", rep.symmetry_defect)?;
        writeln!(w, "periodicity_defect,{:.16e}", rep.periodicity_defect)?;
        writeln!(w, "lipschitz_estimate,{:.16e}", rep.lipschitz_estimate)
    })?;
    if rep.kappa_observed < field.kappa() {
        return Err(Failure::Numerical(format!(
            "observed kappa {} is below the declared {}",
            rep.kappa_observed,
            field.kappa()
        )));
    }
    Ok(())
}

fn correctors(cfg: &RunConfig, field: &CoefficientField, out: &mut Outputs) -> Outcome {
    let grid = TorusGrid::new(field.dim(), cfg.cell_n)?;
    let chi = solve_correctors(field, &grid, cfg.tol)?;
    let a_hat = homogenized_tensor(field, &chi);
    let b = b_field(field, &chi, &a_hat);
    let flux = flux_corrector(&chi, &b, cfg.tol)?;
    for j in 0..field.dim() {
        out.create(&format!("chi_{}.csv", j + 1), |w| write_corrector_csv(w, &chi, j))?;
    }
    out.create("correctors.csv", |w| {
        writeln!(w, "quantity,value")?;
        writeln!(w, "chi_max_abs,{:.16e}", chi.max_abs())?;
        writeln!(w, "b_max_abs,{:.16e}", b.max_abs())?;
        writeln!(w, "flux_corrector_max_abs,{:.16e}", flux.max_abs())?;
        writeln!(w, "antisymmetry_defect,{:.16e}", flux.antisymmetry_defect())?;
        writeln!(w, "weak_divergence_residual,{:.16e}", weak_divergence_residual(&flux, &b))?;
        writeln!(w, "a_hat_asymmetry,{:.16e}", a_hat.asymmetry)
    })
}

fn homogenize(cfg: &RunConfig, field: &CoefficientField, out: &mut Outputs) -> Outcome {
    let (_, a_hat) = effective_tensor(field, cfg)?;
    out.create("homogenized.csv", |w| write_homogenized_csv(w, &a_hat))
}

fn eig(cfg: &RunConfig, field: &CoefficientField, out: &mut Outputs) -> Outcome {
    let opts = eig_options(cfg);
    let mut rows: Vec<(&str, f64, Vec<EigenPair>)> = Vec::new();
    if cfg.eig_operator != EigOperator::Oscillating {
        let (_, a_hat) = effective_tensor(field, cfg)?;
        let grid = DomainGrid::new(2, cfg.mesh_n)?;
        let op = Operator::Homogenized(a_hat.a_hat);
        rows.push((op.label(), 0.0, eigen_spectrum(&op, &grid, cfg.eig_count, &opts)?));
    }
    if cfg.eig_operator != EigOperator::Homogenized {
        let rule = cfg.mesh_rule();
        let spectra: Vec<Result<Vec<EigenPair>, homolab::Error>> = pool(cfg)?.install(|| {
            cfg.eps_list
                .par_iter()
                .map(|&eps| {
                    let grid = DomainGrid::new(2, rule.cells(eps))?;
                    let op = Operator::Oscillating { field: field.clone(), eps };
                    eigen_spectrum(&op, &grid, cfg.eig_count, &opts)
                })
                .collect()
        });
        for (&eps, s) in cfg.eps_list.iter().zip(spectra) {
            rows.push(("oscillating", eps, s?));
        }
    }
    let view: Vec<(&str, f64, &[EigenPair])> = rows.iter().map(|(l, e, p)| (*l, *e, p.as_slice())).collect();
    out.create("spectrum.csv", |w| write_spectrum_csv(w, &view))
}

fn gap_sweep(cfg: &RunConfig, field: &CoefficientField, out: &mut Outputs) -> Outcome {
    let (_, a_hat) = effective_tensor(field, cfg)?;
    let opts = GapSweepOptions { k_max: cfg.k_max, mesh: cfg.mesh_rule(), eig: eig_options(cfg), richardson: true };
    let homogenized = HomogenizedSpectra::new(a_hat.a_hat, cfg.k_max);
    let results: Vec<_> = pool(cfg)?.install(|| {
        cfg.eps_list.par_iter().map(|&eps| gap_records_for_eps(field, eps, &homogenized, &opts)).collect()
    });
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (&eps, r) in cfg.eps_list.iter().zip(results) {
        match r {
            Ok(r) => records.extend(r),
            Err(e) => failures.push(SweepFailure { eps, message: e.to_string() }),
        }
    }
    sort_gap_records(&mut records);
    out.create("gaps.csv", |w| write_gaps_csv(w, &records))?;
    let ks: Vec<usize> = [1, 2, 5, 10, 20].into_iter().filter(|&k| k <= cfg.k_max).collect();
    out.text("gap_vs_eps.gp", &gap_plot_script("gaps.csv", &ks))?;
    let finest = cfg.eps_list.last().copied().unwrap_or(0.0);
    out.text("ratio_vs_k.gp", &ratio_plot_script("gaps.csv", finest))?;
    if !failures.is_empty() {
        out.text("sweep_failures.csv", &failures_text(&failures))?;
    }
    check_failures(&failures)
}

fn layer_widths(cfg: &RunConfig) -> Vec<f64> {
    let mut cs = vec![0.5, 1.0, 2.0, cfg.layer_c];
    cs.sort_by(f64::total_cmp);
    cs.dedup();
    cs
}

fn flux_sweep(cfg: &RunConfig, field: &CoefficientField, out: &mut Outputs) -> Outcome {
    let opts = eig_options(cfg);
    let rule = cfg.mesh_rule();
    let cs = layer_widths(cfg);
    let results: Vec<_> = pool(cfg)?.install(|| {
        cfg.eps_list
            .par_iter()
            .map(|&eps| flux_and_layer_records_for_eps(field, eps, cfg.k_max, rule, &opts, &cs))
            .collect()
    });
    let mut sweep = FluxSweep::default();
    let mut layers: Vec<LayerRecord> = Vec::new();
    for (&eps, r) in cfg.eps_list.iter().zip(results) {
        match r {
            Ok((f, l)) => {
                sweep.records.extend(f);
                layers.extend(l);
            }
            Err(e) => sweep.failures.push(SweepFailure { eps, message: e.to_string() }),
        }
    }
    finish_flux_sweep(&mut sweep);
    out.create("flux.csv", |w| write_flux_csv(w, &sweep.records))?;
    out.create("layer.csv", |w| write_layer_csv(w, &layers))?;
    out.create("flux_summary.csv", |w| {
        writeln!(
            w,
            "regime,count,min_flux_over_lambda,max_flux_over_lambda,min_flux_over_lambda_1p5,max_flux_over_lambda_1p5,max_flux_over_refined"
        )?;
        for s in &sweep.summaries {
            writeln!(
                w,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.regime,
                s.count,
                s.min_flux_over_lambda,
                s.max_flux_over_lambda,
                s.min_flux_over_lambda_1p5,
                s.max_flux_over_lambda_1p5,
                s.max_flux_over_refined
            )?;
        }
        Ok(())
    })?;
    out.text("flux_vs_lambda.gp", &flux_plot_script("flux.csv"))?;
    if !sweep.failures.is_empty() {
        out.text("sweep_failures.csv", &failures_text(&sweep.failures))?;
    }
    check_failures(&sweep.failures)
}

fn h1_study(cfg: &RunConfig, field: &CoefficientField, out: &mut Outputs) -> Outcome {
    use std::f64::consts::PI;
    let (_, a_hat) = effective_tensor(field, cfg)?;
    let rule = cfg.mesh_rule();
    let f = |x: &[f64]| (PI * x[0]).sin() * (PI * x[1]).sin();
    let rows: Vec<_> = pool(cfg)?.install(|| {
        cfg.eps_list
            .par_iter()
            .map(|&eps| corrector_study(field, &[eps], &a_hat.a_hat, rule, f, cfg.tol))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let rows: Vec<_> = rows.into_iter().flatten().collect();
    let reports: Vec<_> = rows.iter().map(|r| r.report).collect();
    out.create("approx.csv", |w| write_approx_csv(w, &reports))?;
    out.create("dirichlet_corrector.csv", |w| {
        writeln!(w, "eps,deviation_sup")?;
        for r in &rows {
            writeln!(w, "{:.16e},{:.16e}", r.report.eps, r.deviation_sup)?;
        }
        Ok(())
    })
}

fn oned_scan(cfg: &RunConfig, field: &CoefficientField, out: &mut Outputs) -> Outcome {
    let results: Vec<_> = pool(cfg)?.install(|| {
        cfg.eps_list
            .par_iter()
            .map(|&eps| {
                let problem = OneDimProblem::with_default_mesh(field.clone(), eps)?;
                let e2 = eps * eps;
                resonance_scan(&problem, cfg.scan_eps2_lambda_min / e2, cfg.scan_eps2_lambda_max / e2, cfg.eig_tol)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let rows: Vec<_> = results.iter().flat_map(|s| s.rows.iter().copied()).collect();
    out.create("oned_scan.csv", |w| write_oned_scan_csv(w, &rows))?;
    out.create("oned_peaks.csv", |w| {
        writeln!(w, "eps,k,lambda,eps2_lambda,flux_over_lambda")?;
        for s in &results {
            if let Some(p) = s.peak.map(|i| s.rows[i]) {
                writeln!(w, "{:.16e},{},{:.16e},{:.16e},{:.16e}", p.eps, p.k, p.lambda, p.eps2_lambda, p.flux_over_lambda)?;
            }
        }
        Ok(())
    })
}

/// Rows of a CSV written by this tool, without the header.
fn read_rows(path: &Path) -> Option<Vec<Vec<String>>> {
    let text = fs::read_to_string(path).ok()?;
    Some(text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect())
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or(f64::NAN)
}

fn report(dir: &Path, out: &mut Outputs) -> Outcome {
    let mut s = String::from("# homolab report\n");
    let mut found = 0;

    if let Some(rows) = read_rows(&dir.join("homogenized.csv")) {
        found += 1;
        s.push_str("\n## homogenized tensor\n");
        for r in rows.iter().filter(|r| r.len() == 3) {
            let _ = writeln!(s, "a_hat[{},{}] = {:.10}", r[0], r[1], num(&r[2]));
        }
    }

    if let Some(rows) = read_rows(&dir.join("gaps.csv")) {
        found += 1;
        s.push_str("\n## eigenvalue gaps\n");
        let mut ks: Vec<usize> = rows.iter().filter_map(|r| r.get(1)?.parse().ok()).collect();
        ks.sort_unstable();
        ks.dedup();
        for k in ks {
            let sel: Vec<&Vec<String>> = rows.iter().filter(|r| r[1].parse() == Ok(k)).collect();
            let xs: Vec<f64> = sel.iter().map(|r| num(&r[0])).collect();
            let ys: Vec<f64> = sel.iter().map(|r| num(&r[4])).collect();
            let under = sel.iter().filter(|r| r[7] != "resolved").count();
            match fit_loglog_slope(&xs, &ys) {
                Ok(fit) => {
                    let _ = writeln!(s, "k={k}: gap ~ eps^{:.3} (r2 {:.4}), underresolved {under}", fit.slope, fit.r_squared);
                }
                Err(_) => {
                    let _ = writeln!(s, "k={k}: too few eps values for a slope");
                }
            }
        }
        let max_ratio = rows.iter().map(|r| num(&r[5])).fold(0.0, f64::max);
        let _ = writeln!(s, "max gap/(eps lambda_0^1.5) = {max_ratio:.6e}");
    }

    if let Some(rows) = read_rows(&dir.join("flux_summary.csv")) {
        found += 1;
        s.push_str("\n## boundary flux (square domain; regimes are exploratory)\n");
        for r in rows.iter().filter(|r| r.len() == 7) {
            let _ = writeln!(
                s,
                "{}: {} records, flux/lambda in [{:.4}, {:.4}], flux/lambda^1.5 in [{:.4}, {:.4}]",
                r[0],
                r[1],
                num(&r[2]),
                num(&r[3]),
                num(&r[4]),
                num(&r[5])
            );
        }
    }

    if let Some(rows) = read_rows(&dir.join("approx.csv")) {
        found += 1;
        s.push_str("\n## first-order corrector approximation\n");
        let xs: Vec<f64> = rows.iter().map(|r| num(&r[0])).collect();
        let ys: Vec<f64> = rows.iter().map(|r| num(&r[2])).collect();
        for (x, y) in xs.iter().zip(&ys) {
            let _ = writeln!(s, "eps={x:.6}: H1 error {y:.6e}");
        }
        if let Ok(fit) = fit_loglog_slope(&xs, &ys) {
            let _ = writeln!(s, "H1 error ~ eps^{:.3}", fit.slope);
        }
    }

    if let Some(rows) = read_rows(&dir.join("oned_peaks.csv")) {
        found += 1;
        s.push_str("\n## 1D resonance scan\n");
        for r in rows.iter().filter(|r| r.len() == 5) {
            let _ = writeln!(
                s,
                "eps={:.6}: peak flux/lambda {:.4} at k={} (eps^2 lambda = {:.4})",
                num(&r[0]),
                num(&r[4]),
                r[1],
                num(&r[3])
            );
        }
    }

    if found == 0 {
        return Err(Failure::Numerical(format!("no result tables found in {}", dir.display())));
    }
    out.text("report.txt", &s)
}

/// Runs `command` and writes its outputs, `resolved_config.txt` and
/// `run_manifest.txt` into `dir`.
pub fn run(command: Command, cfg: &RunConfig, config_path: &Path, dir: &Path) -> Outcome {
    let field = build_field(cfg, command.dim())?;
    if command != Command::Certify {
        // every solve needs an elliptic field
        field.certify(cfg.certify_samples).map_err(|e| Failure::Config(e.to_string()))?;
    }
    fs::create_dir_all(dir).map_err(|e| Failure::Numerical(format!("cannot create {}: {e}", dir.display())))?;
    let mut out = Outputs { dir: dir.to_path_buf(), written: Vec::new() };
    out.text("resolved_config.txt", &cfg.resolved())?;

    let started = SystemTime::now();
    let clock = Instant::now();
    log::info!("running {} into {}", command.name(), dir.display());
    let result = match command {
        Command::Certify => certify(cfg, &field, &mut out),
        Command::Correctors => correctors(cfg, &field, &mut out),
        Command::Homogenize => homogenize(cfg, &field, &mut out),
        Command::Eig => eig(cfg, &field, &mut out),
        Command::GapSweep => gap_sweep(cfg, &field, &mut out),
        Command::FluxSweep => flux_sweep(cfg, &field, &mut out),
        Command::H1Study => h1_study(cfg, &field, &mut out),
        Command::OnedScan => oned_scan(cfg, &field, &mut out),
        Command::Report => report(dir, &mut out),
    };

    let mut m = String::new();
    let _ = writeln!(m, "command = {}", command.name());
    let _ = writeln!(m, "config = {}", config_path.display());
    let _ = writeln!(m, "seed = {}", cfg.seed);
    let _ = writeln!(m, "eig.seed = {}", cfg.eig_seed);
    let _ = writeln!(m, "jobs = {}", cfg.jobs);
    let _ = writeln!(m, "homolab_version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "core_version = {}", homolab::VERSION);
    let _ = writeln!(m, "started_unix = {}", started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
    let _ = writeln!(m, "wall_time_s = {:.3}", clock.elapsed().as_secs_f64());
    let _ = writeln!(
        m,
        "status = {}",
        match &result {
            Ok(()) => "ok".to_string(),
            Err(e) => e.to_string(),
        }
    );
    let _ = writeln!(m, "outputs = {}", out.written.join(","));
    fs::write(dir.join("run_manifest.txt"), m)?;
    result
}
