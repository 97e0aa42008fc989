use homolab::cell::{b_field, flux_corrector, homogenized_tensor, solve_correctors};
use homolab::domain::{eigen_spectrum, spectral_projection, Operator};
use homolab::experiments::{fit_loglog_slope, GapRecord};
use homolab::export::write_gaps_csv;
use homolab::linalg::EigenOptions;
use homolab::mesh::{assemble_mass, assemble_stiffness_domain_full, assemble_stiffness_torus};
use homolab::{CoefficientField, DomainGrid, FieldKind, Tensor, TorusGrid};
use proptest::prelude::*;

fn builtin(kind: u8, mu: f64, r: f64) -> CoefficientField {
    match kind % 3 {
        0 => CoefficientField::laminate_sine(2, mu, r),
        1 => CoefficientField::product_sine(2, mu, r),
        _ => CoefficientField::reciprocal_sine(2, mu, r),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evaluate_is_periodic_on_dyadic_points(kind in 0u8..3, mu in 0.5f64..2.0, r in -0.9f64..0.9,
                                            i in 0u32..1024, j in 0u32..1024, s in -3i32..4, t in -3i32..4) {
        let f = builtin(kind, mu, r);
        let y = [i as f64 / 1024.0, j as f64 / 1024.0];
        let shifted = [y[0] + s as f64, y[1] + t as f64];
        prop_assert_eq!(f.evaluate(&y), f.evaluate(&shifted));
    }

    #[test]
    fn evaluate_is_periodic_to_rounding(kind in 0u8..3, r in -0.9f64..0.9, y0 in 0.0f64..1.0, y1 in 0.0f64..1.0) {
        let f = builtin(kind, 1.0, r);
        let a = f.evaluate(&[y0, y1]);
        prop_assert!(a.max_abs_diff(&f.evaluate(&[y0 + 1.0, y1 - 2.0])) <= 1e-14);
        prop_assert_eq!(a.symmetry_defect(), 0.0);
    }

    #[test]
    fn certified_kappa_is_at_least_declared(kind in 0u8..3, mu in 0.5f64..2.0, r in -0.9f64..0.9) {
        let f = builtin(kind, mu, r);
        let rep = f.certify(64).unwrap();
        prop_assert!(rep.kappa_observed >= f.kappa() * (1.0 - 1e-12));
        prop_assert!(rep.periodicity_defect <= 1e-14);
    }

    #[test]
    fn assembled_matrices_are_symmetric_and_mass_sums_to_one(kind in 0u8..3, r in -0.9f64..0.9, n in 2usize..12, eps in 0.1f64..1.0) {
        let f = builtin(kind, 1.0, r);
        let torus = TorusGrid::new(2, n).unwrap();
        let k = assemble_stiffness_torus(&f, &torus);
        prop_assert!(k.symmetry_defect() <= 1e-14 * k.values().iter().fold(0.0f64, |m, v| m.max(v.abs())));
        // constants lie in the kernel of the periodic stiffness
        let kc = k.matvec(&vec![1.0; torus.num_dofs()]);
        prop_assert!(kc.iter().all(|v| v.abs() <= 1e-12));
        prop_assert!((assemble_mass(&torus).total_sum() - 1.0).abs() <= 1e-12);
        let grid = DomainGrid::new(2, n.max(2)).unwrap();
        let kd = assemble_stiffness_domain_full(&f, eps, &grid);
        prop_assert!(kd.symmetry_defect() <= 1e-14 * kd.values().iter().fold(0.0f64, |m, v| m.max(v.abs())));
        prop_assert!((assemble_mass(&grid).total_sum() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn slope_fit_recovers_power_laws(p in -3.0f64..3.0, c in 0.01f64..100.0) {
        let xs = [0.125, 0.0625, 0.03125, 0.015625, 0.0078125];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| c * x.powf(p)).collect();
        let fit = fit_loglog_slope(&xs, &ys).unwrap();
        prop_assert!((fit.slope - p).abs() <= 1e-10);
        prop_assert!((fit.r_squared - 1.0).abs() <= 1e-10 || p.abs() < 1e-9);
    }

    #[test]
    fn gap_csv_round_trips_exactly(lambda_eps in 1.0f64..1e4, lambda_0 in 1.0f64..1e4, eps in 1e-3f64..0.5, err in 0.0f64..1.0) {
        let rec = GapRecord { eps, k: 3, lambda_eps, lambda_0, gap: (lambda_eps - lambda_0).abs(),
            ratio_thm_a: 0.0, ratio_l2: 0.0, fem_error: err, resolved: true };
        let mut buf = Vec::new();
        write_gaps_csv(&mut buf, &[rec]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        prop_assert_eq!(row[0].parse::<f64>().unwrap(), eps);
        prop_assert_eq!(row[2].parse::<f64>().unwrap(), lambda_eps);
        prop_assert_eq!(row[3].parse::<f64>().unwrap(), lambda_0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn flux_corrector_is_antisymmetric(kind in 0u8..3, r in -0.8f64..0.8, n in 4usize..16) {
        let f = builtin(kind, 1.0, r);
        let grid = TorusGrid::new(2, n).unwrap();
        let chi = solve_correctors(&f, &grid, 1e-10).unwrap();
        let a_hat = homogenized_tensor(&f, &chi);
        prop_assert!(a_hat.a_hat.symmetry_defect() == 0.0);
        let b = b_field(&f, &chi, &a_hat);
        let fc = flux_corrector(&chi, &b, 1e-10).unwrap();
        prop_assert_eq!(fc.antisymmetry_defect(), 0.0);
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!(b.mean(i, j).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn spectral_projection_never_grows(coeffs in proptest::collection::vec(-1.0f64..1.0, 8), lam in 1.0f64..400.0) {
        let grid = DomainGrid::new(2, 8).unwrap();
        let op = Operator::Homogenized(Tensor::identity(2));
        let spectrum = eigen_spectrum(&op, &grid, grid.num_interior(), &EigenOptions::default()).unwrap();
        let mass = assemble_mass(&grid);
        let mut f = vec![0.0; grid.num_nodes()];
        for (c, p) in coeffs.iter().zip(&spectrum) {
            for (fi, v) in f.iter_mut().zip(&p.vector) {
                *fi += c * v;
            }
        }
        let s = spectral_projection(&spectrum, &mass, &f, lam).unwrap();
        prop_assert!(s.projection_norm <= s.f_norm * (1.0 + 1e-10));
        let in_window = |k: usize| {
            let q = spectrum[k].lambda.sqrt();
            q >= lam.sqrt() && q < lam.sqrt() + 1.0
        };
        prop_assert!(s.window.iter().all(|&k| in_window(k)));
    }
}

#[test]
fn builtin_names_round_trip() {
    for k in [FieldKind::Constant, FieldKind::LaminateSine, FieldKind::ProductSine, FieldKind::ReciprocalSine] {
        assert_eq!(k.to_string().parse::<FieldKind>().unwrap(), k);
    }
}
