use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn homolab(args: &[&str], dir: &Path, envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_homolab"));
    cmd.args(args).current_dir(dir).env_remove("HOMOLAB_OUT");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn homolab")
}

fn write_cfg(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn homogenize_laminate_writes_harmonic_mean() {
    let tmp = TempDir::new().unwrap();
    write_cfg(tmp.path(), "laminate.cfg", "coeff.kind = laminate_sine\ncell.n = 128\noutput_dir = out\n");
    let o = homolab(&["homogenize", "-c", "laminate.cfg"], tmp.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&tmp.path().join("out/homogenized.csv"));
    let a11: f64 = rows[0][2].parse().unwrap();
    let a22: f64 = rows[3][2].parse().unwrap();
    // harmonic mean of 1 + 0.5 sin across the layers, arithmetic mean along them
    let expect = (1.0f64 - 0.25).sqrt();
    assert!((a11 - expect).abs() < 1e-3 * expect, "{a11}");
    assert!((a22 - 1.0).abs() < 1e-12);
    assert!(tmp.path().join("out/run_manifest.txt").exists());
    assert!(tmp.path().join("out/resolved_config.txt").exists());
}

#[test]
fn eig_constant_first_row_is_two_pi_squared() {
    let tmp = TempDir::new().unwrap();
    write_cfg(
        tmp.path(),
        "constant.cfg",
        "coeff.kind = constant\nmesh.n = 32\neig.count = 4\neig.operator = homogenized\noutput_dir = out\n",
    );
    let o = homolab(&["eig", "-c", "constant.cfg"], tmp.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&tmp.path().join("out/spectrum.csv"));
    assert_eq!(rows.len(), 4);
    let lam: f64 = rows[0][3].parse().unwrap();
    let exact = 2.0 * std::f64::consts::PI.powi(2);
    assert!((lam - exact).abs() < 5e-3 * exact, "{lam}");
}

#[test]
fn unknown_key_exits_one_without_outputs() {
    let tmp = TempDir::new().unwrap();
    write_cfg(tmp.path(), "bad.cfg", "coeff.kind = constant\nmesh.nn = 64\noutput_dir = out\n");
    let o = homolab(&["gap-sweep", "-c", "bad.cfg"], tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn malformed_value_exits_one_and_names_line() {
    let tmp = TempDir::new().unwrap();
    write_cfg(tmp.path(), "bad.cfg", "coeff.kind = constant\n# tolerance\neig.tol = banana\n");
    let o = homolab(&["eig", "-c", "bad.cfg"], tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("eig.tol"), "{err}");
}

#[test]
fn non_elliptic_field_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    write_cfg(tmp.path(), "c.cfg", "coeff.kind = laminate_sine\ncoeff.r = 1.2\noutput_dir = out\n");
    let o = homolab(&["homogenize", "-c", "c.cfg"], tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn missing_config_file_exits_one() {
    let tmp = TempDir::new().unwrap();
    let o = homolab(&["eig", "-c", "nope.cfg"], tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unresolvable_sweep_exits_two() {
    let tmp = TempDir::new().unwrap();
    // four cells cannot be coarsened twice for the extrapolation
    write_cfg(
        tmp.path(),
        "c.cfg",
        "coeff.kind = constant\nmesh.rule = fixed\nmesh.n = 4\nk_max = 2\neps_list = 1/2\ncell.n = 8\noutput_dir = out\n",
    );
    let o = homolab(&["gap-sweep", "-c", "c.cfg"], tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(tmp.path().join("out/sweep_failures.csv").exists());
    let manifest = fs::read_to_string(tmp.path().join("out/run_manifest.txt")).unwrap();
    assert!(manifest.contains("numerical failure"));
}

#[test]
fn env_var_overrides_output_dir() {
    let tmp = TempDir::new().unwrap();
    write_cfg(tmp.path(), "c.cfg", "coeff.kind = constant\noutput_dir = ignored\n");
    let target = tmp.path().join("elsewhere");
    let o = homolab(&["certify", "-c", "c.cfg"], tmp.path(), &[("HOMOLAB_OUT", &target)]);
    assert!(o.status.success());
    assert!(target.join("certify.csv").exists());
    assert!(!tmp.path().join("ignored").exists());
}

#[test]
fn report_without_tables_exits_two() {
    let tmp = TempDir::new().unwrap();
    write_cfg(tmp.path(), "c.cfg", "coeff.kind = constant\noutput_dir = out\n");
    let o = homolab(&["report", "-c", "c.cfg"], tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

const SWEEP: &str = "coeff.kind = laminate_sine
cell.n = 32
mesh.rule = fixed
mesh.n = 32
eps_list = 1/4, 1/8
k_max = 3
";

fn without_timestamps(manifest: &str) -> String {
    manifest
        .lines()
        .filter(|l| !l.starts_with("started_unix") && !l.starts_with("wall_time_s") && !l.starts_with("config"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn sweeps_are_deterministic_across_reruns_and_jobs() {
    let tmp = TempDir::new().unwrap();
    write_cfg(tmp.path(), "a.cfg", &format!("{SWEEP}jobs = 1\noutput_dir = a\n"));
    write_cfg(tmp.path(), "b.cfg", &format!("{SWEEP}jobs = 2\noutput_dir = b\n"));
    for cmd in ["gap-sweep", "flux-sweep"] {
        for cfg in ["a.cfg", "a.cfg", "b.cfg"] {
            let o = homolab(&[cmd, "-c", cfg], tmp.path(), &[]);
            assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        }
    }
    let first = fs::read(tmp.path().join("a/gaps.csv")).unwrap();
    let manifest = fs::read_to_string(tmp.path().join("a/run_manifest.txt")).unwrap();
    for cmd in ["gap-sweep", "flux-sweep"] {
        let o = homolab(&[cmd, "-c", "a.cfg"], tmp.path(), &[]);
        assert!(o.status.success());
    }
    assert_eq!(first, fs::read(tmp.path().join("a/gaps.csv")).unwrap());
    for f in ["gaps.csv", "flux.csv", "layer.csv", "flux_summary.csv"] {
        assert_eq!(
            fs::read(tmp.path().join("a").join(f)).unwrap(),
            fs::read(tmp.path().join("b").join(f)).unwrap(),
            "{f} depends on jobs"
        );
    }
    let again = fs::read_to_string(tmp.path().join("a/run_manifest.txt")).unwrap();
    assert_eq!(without_timestamps(&manifest), without_timestamps(&again));
}

#[test]
fn every_command_writes_headed_csvs() {
    let tmp = TempDir::new().unwrap();
    write_cfg(tmp.path(), "c.cfg", &format!("{SWEEP}eig.count = 3\noutput_dir = out\n"));
    write_cfg(tmp.path(), "oned.cfg", "coeff.kind = reciprocal_sine\neps_list = 1/10\noutput_dir = out\n");
    let runs = [
        ("certify", "c.cfg"),
        ("correctors", "c.cfg"),
        ("homogenize", "c.cfg"),
        ("eig", "c.cfg"),
        ("gap-sweep", "c.cfg"),
        ("flux-sweep", "c.cfg"),
        ("h1-study", "c.cfg"),
        ("oned-scan", "oned.cfg"),
        ("report", "c.cfg"),
    ];
    for (cmd, cfg) in runs {
        let o = homolab(&[cmd, "-c", cfg], tmp.path(), &[]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let headers = [
        ("certify.csv", "quantity,value"),
        ("chi_1.csv", "y1,y2,value"),
        ("homogenized.csv", "i,j,a_hat_ij"),
        ("spectrum.csv", "operator,eps,k,lambda,residual"),
        ("gaps.csv", "eps,k,lambda_eps,lambda_0,gap,ratio_thm_a,ratio_l2,resolved"),
        ("flux.csv", "eps,k,lambda,flux,flux_over_lambda,eps2_lambda,regime"),
        ("approx.csv", "eps,h,h1_error,l2_error,grad_error,f_norm"),
        ("oned_scan.csv", "eps,k,lambda,eps2_lambda,flux,flux_over_lambda,flux_over_lambda_1p5"),
    ];
    for (file, header) in headers {
        let text = fs::read_to_string(tmp.path().join("out").join(file)).unwrap();
        assert_eq!(text.lines().next(), Some(header), "{file}");
        assert!(text.lines().count() > 1, "{file} has no rows");
    }
    let spectrum = csv_rows(&tmp.path().join("out/spectrum.csv"));
    // homogenized block first, then one block per eps
    assert_eq!(spectrum.len(), 9);
    assert_eq!(spectrum[0][0], "homogenized");
    for script in ["gap_vs_eps.gp", "ratio_vs_k.gp", "flux_vs_lambda.gp"] {
        let s = fs::read_to_string(tmp.path().join("out").join(script)).unwrap();
        assert!(s.contains("set datafile separator ','") && s.contains("plot "), "{script}");
    }
    let report = fs::read_to_string(tmp.path().join("out/report.txt")).unwrap();
    assert!(report.contains("homogenized tensor") && report.contains("1D resonance scan"));
}
