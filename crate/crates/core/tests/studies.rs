//! Cross-module checks at moderate resolution.

use std::f64::consts::PI;

use homolab::cell::{b_field, homogenized_tensor, solve_correctors};
use homolab::domain::{eigen_spectrum, spectral_projection, Operator};
use homolab::experiments::{corrector_study, gap_sweep, weyl_check, GapSweepOptions, MeshRule};
use homolab::linalg::EigenOptions;
use homolab::mesh::assemble_mass;
use homolab::onedim::{resonance_scan, OneDimProblem};
use homolab::{CoefficientField, DomainGrid, Tensor, TorusGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn laminate() -> CoefficientField {
    CoefficientField::laminate_sine(2, 1.0, 0.5)
}

#[test]
fn laminate_transverse_b_column_is_one_minus_a() {
    let field = laminate();
    let grid = TorusGrid::new(2, 64).unwrap();
    let chi = solve_correctors(&field, &grid, 1e-10).unwrap();
    let a_hat = homogenized_tensor(&field, &chi);
    let b = b_field(&field, &chi, &a_hat);
    let (mut lo, mut hi, mut off) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for q in 0..b.len() {
        lo = lo.min(b.get(q, 1, 1));
        hi = hi.max(b.get(q, 1, 1));
        off = off.max(b.get(q, 0, 1).abs());
    }
    // b_22 = 1 - a(y_1) ranges over [-0.5, 0.5]; b_12 vanishes with chi_2
    assert!(off < 1e-12, "{off}");
    assert!(lo >= -0.5 - 1e-12 && hi <= 0.5 + 1e-12);
    assert!(lo < -0.49 && hi > 0.49, "{lo} {hi}");
    assert!(b.mean(1, 1).abs() < 1e-12);
}

#[test]
fn product_field_b_means_vanish_at_n128() {
    let field = CoefficientField::product_sine(2, 1.0, 0.5);
    let grid = TorusGrid::new(2, 128).unwrap();
    let chi = solve_correctors(&field, &grid, 1e-10).unwrap();
    let a_hat = homogenized_tensor(&field, &chi);
    let b = b_field(&field, &chi, &a_hat);
    for i in 0..2 {
        for j in 0..2 {
            assert!(b.mean(i, j).abs() <= 1e-8, "mean b[{i}{j}] = {}", b.mean(i, j));
        }
    }
}

#[test]
fn laminate_corrector_errors_scale_with_eps() {
    let field = laminate();
    let a_hat = Tensor::from_rows(&[&[0.75f64.sqrt(), 0.0], &[0.0, 1.0]]);
    let eps = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0];
    let f = |x: &[f64]| (PI * x[0]).sin() * (PI * x[1]).sin();
    let rows = corrector_study(&field, &eps, &a_hat, MeshRule::EpsOver(16), f, 1e-10).unwrap();
    let spread = |v: Vec<f64>| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(0.0, f64::max);
        hi / lo
    };
    let dev: Vec<f64> = rows.iter().map(|r| r.deviation_sup / r.report.eps).collect();
    let grad: Vec<f64> = rows.iter().map(|r| r.report.grad_error / (r.report.eps * r.report.f_norm)).collect();
    assert!(spread(dev.clone()) < 1.5, "{dev:?}");
    assert!(spread(grad.clone()) < 2.0, "{grad:?}");
}

#[test]
fn remainder_bounded_by_window_width() {
    let grid = DomainGrid::new(2, 16).unwrap();
    let spec = eigen_spectrum(&Operator::Homogenized(Tensor::identity(2)), &grid, 6, &EigenOptions::default()).unwrap();
    let mass = assemble_mass(&grid);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut f = vec![0.0; grid.num_nodes()];
    for &i in grid.interior_nodes() {
        f[i] = rng.gen_range(-1.0..1.0);
    }
    let norm = mass.inner(&f, &f).sqrt();
    f.iter_mut().for_each(|v| *v /= norm);
    // window [sqrt 19, sqrt 19 + 1) holds lambda_1 only
    let lam = 19.0;
    let s = spectral_projection(&spec, &mass, &f, lam).unwrap();
    assert_eq!(s.window, vec![0]);
    assert!((s.f_norm - 1.0).abs() < 1e-12);
    assert!(s.projection_norm <= 1.0);
    assert!(s.remainder_norm <= (2.0 * lam.sqrt() + 1.0) * s.f_norm);
}

#[test]
fn laminate_weyl_envelope_sits_inside_kappa_band() {
    let kappa = 0.5;
    let grid = DomainGrid::new(2, 128).unwrap();
    let opts = EigenOptions::default();
    let lap: Vec<f64> = eigen_spectrum(&Operator::Homogenized(Tensor::identity(2)), &grid, 20, &opts)
        .unwrap()
        .iter()
        .map(|p| p.lambda)
        .collect();
    let op = Operator::Oscillating { field: laminate(), eps: 1.0 / 8.0 };
    let lam: Vec<f64> = eigen_spectrum(&op, &grid, 20, &opts).unwrap().iter().map(|p| p.lambda).collect();
    let (e0, e1) = (weyl_check(&lap, 2).unwrap(), weyl_check(&lam, 2).unwrap());
    assert!(e1.min >= kappa * e0.min && e1.max <= e0.max / kappa, "{e0:?} {e1:?}");
    for (a, b) in lam.iter().zip(&lap) {
        assert!(*a >= kappa * b && *a <= b / kappa);
    }
}

#[test]
fn laminate_gap_is_bounded_by_eps_lambda_three_halves() {
    // Only an upper bound is tested: for the laminate the observed rate is faster than eps.
    let field = laminate();
    let a_hat = Tensor::from_rows(&[&[0.75f64.sqrt(), 0.0], &[0.0, 1.0]]);
    let opts = GapSweepOptions { k_max: 4, ..Default::default() };
    let sweep = gap_sweep(&field, &[1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0], &a_hat, &opts).unwrap();
    assert!(sweep.failures.is_empty());
    let worst = sweep.records.iter().map(|r| r.ratio_thm_a).fold(0.0, f64::max);
    assert!(worst < 0.05, "{worst}");
    // k = 1 sits below the discretization error; k = 3 is resolved at the two coarser eps
    let k3: Vec<f64> = sweep.records.iter().filter(|r| r.k == 3).map(|r| r.gap).collect();
    assert!(k3[1] < 0.5 * k3[0], "{k3:?}");
    assert!(k3[2] < 0.5 * k3[1], "{k3:?}");
}

#[test]
fn oned_scan_peak_is_the_largest_ratio() {
    let field = CoefficientField::reciprocal_sine(1, 0.5, 0.5);
    let eps = 1.0 / 40.0;
    let p = OneDimProblem::with_default_mesh(field, eps).unwrap();
    assert!((p.a_bar() - 0.5).abs() < 1e-12);
    let scan = resonance_scan(&p, 0.1 / (eps * eps), 4.0 / (eps * eps), 1e-9).unwrap();
    let peak = scan.rows[scan.peak.unwrap()];
    assert!(scan.rows.iter().all(|r| r.flux_over_lambda <= peak.flux_over_lambda));
    assert!(scan.rows.iter().all(|r| r.eps2_lambda >= 0.1 && r.eps2_lambda <= 4.0));
    println!("eps=1/40 peak flux/lambda {:.4} at eps^2 lambda {:.3}", peak.flux_over_lambda, peak.eps2_lambda);
    // flux / lambda^1.5 is bounded above across the scan by its low-frequency value
    let first = scan.rows[0].flux_over_lambda_1p5;
    assert!(scan.rows.iter().all(|r| r.flux_over_lambda_1p5 <= first * (1.0 + 1e-9)));
}
