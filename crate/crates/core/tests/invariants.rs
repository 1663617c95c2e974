use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use spincat::analytics::{
    f_corrected, f_corrected_with_delta, f_encoded, f_physical, fit_error_curve, fit_line, uhlmann_fidelity, FitKind,
    FitPoint,
};
use spincat::channels::dephase;
use spincat::correction::{correction_unitary, second_order_unitary, CompositeSpace, CorrectionConfig, PulseModel};
use spincat::linalg::{c, C64};
use spincat::spinops::{su2_rotation, Basis, SpinManifold};
use spincat::state::DensityMatrix;
use spincat::tomography::{born_probabilities, complete_settings, projector_set, standard_settings};

fn manifold(twice_j: u32) -> SpinManifold {
    SpinManifold::new(twice_j as f64 / 2.0, 1.2).unwrap()
}

/// Random mixed state `A A† / tr` from flat real parts.
fn random_state(m: &SpinManifold, parts: &[f64]) -> DensityMatrix {
    let d = m.dim();
    let a = DMatrix::from_fn(d, d, |i, j| c(parts[2 * (i * d + j)], parts[2 * (i * d + j) + 1]));
    let mut rho = &a * a.adjoint();
    let tr = rho.trace().re;
    rho /= c(tr, 0.0);
    DensityMatrix::from_matrix(rho, Basis::Spin(*m)).unwrap()
}

fn state_strategy() -> impl Strategy<Value = (u32, Vec<f64>)> {
    (1u32..=5).prop_flat_map(|tj| {
        let d = tj as usize + 1;
        (Just(tj), prop::collection::vec(-1.0f64..1.0, 2 * d * d))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rotations_are_unitary(tj in 1u32..=7, ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in 0.1f64..1.0, angle in -7.0f64..7.0) {
        let n = (ax * ax + ay * ay + az * az).sqrt();
        let u = su2_rotation(&manifold(tj), [ax / n, ay / n, az / n], angle).unwrap();
        prop_assert!(u.unitarity_error() < 1e-11);
    }

    #[test]
    fn dephasing_is_a_channel((tj, parts) in state_strategy(), s in 0.0f64..2.0) {
        let m = manifold(tj);
        let rho = random_state(&m, &parts);
        let out = dephase(&rho, s).unwrap();
        prop_assert!((out.trace() - 1.0).abs() < 1e-12);
        prop_assert!(out.eigenvalues().iter().all(|&e| e > -1e-12));
        prop_assert!(out.purity() <= rho.purity() + 1e-12);
    }

    #[test]
    fn dephasing_widths_add_in_quadrature((tj, parts) in state_strategy(), a in 0.0f64..1.5, b in 0.0f64..1.5) {
        let rho = random_state(&manifold(tj), &parts);
        let twice = dephase(&dephase(&rho, a).unwrap(), b).unwrap();
        let once = dephase(&rho, a.hypot(b)).unwrap();
        prop_assert!(twice.max_abs_diff(&once) < 1e-12);
    }

    #[test]
    fn closed_forms_are_bounded_and_decreasing(chi in 0.0f64..2.0, d in 1e-4f64..0.5, delta in 0.0f64..0.5) {
        for f in [|x| f_physical(x, 2.0), |x| f_encoded(x, 1.2), |x| f_corrected(x, 1.2)] {
            let (lo, hi) = (f(chi + d), f(chi));
            prop_assert!(lo <= hi + 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&hi));
        }
        prop_assert!((f_corrected_with_delta(chi, 0.0, 1.2) - f_corrected(chi, 1.2)).abs() < 1e-12);
        prop_assert!(f_corrected_with_delta(chi, delta, 1.2) <= f_corrected(chi, 1.2) + 1e-12);
    }

    #[test]
    fn exact_points_refit_exactly(a in 0.1f64..50.0, off in 0.0f64..0.05, kind in 0usize..3) {
        let kind = [FitKind::Linear, FitKind::Quadratic, FitKind::Cubic][kind];
        let pts: Vec<FitPoint> = (1..=7)
            .map(|i| {
                let chi = 0.01 * i as f64;
                FitPoint { t: 0.0, chi, epsilon: a * chi.powi(kind.power()) + off, sigma: 1e-3 }
            })
            .collect();
        let fit = fit_error_curve(&pts, kind).unwrap();
        prop_assert!((fit.coefficient / a - 1.0).abs() < 1e-8);
        prop_assert!((fit.offset - off).abs() < 1e-10);
        prop_assert!(fit.chi_squared < 1e-12);
        let eps = 0.5 * (fit.predict(0.02) + fit.predict(0.05));
        prop_assert!((fit.predict(fit.invert(eps).unwrap()) - eps).abs() < 1e-10);
    }

    #[test]
    fn line_fit_recovers_line(m in -10.0f64..10.0, b in -1.0f64..1.0) {
        let x: Vec<f64> = (0..6).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| m * v + b).collect();
        let fit = fit_line(&x, &y, &[0.01; 6]).unwrap();
        prop_assert!((fit.slope - m).abs() < 1e-9 && (fit.intercept - b).abs() < 1e-9);
    }

    #[test]
    fn correction_pulses_are_unitary(phi in -7.0f64..7.0, calibrated: bool, cutoff in 2usize..5) {
        let cfg = CorrectionConfig {
            phi_c: phi,
            pulse_model: if calibrated { PulseModel::Calibrated } else { PulseModel::Ideal },
            fock_cutoff: cutoff,
            ..CorrectionConfig::default()
        };
        let one = correction_unitary(&CompositeSpace::new(cutoff, 1).unwrap(), &cfg).unwrap();
        prop_assert!(one.unitarity_error() < 1e-11);
        let two = second_order_unitary(&CompositeSpace::new(cutoff, 2).unwrap(), &cfg).unwrap();
        prop_assert!(two.unitarity_error() < 1e-11);
    }

    #[test]
    fn born_probabilities_are_distributions(parts in prop::collection::vec(-1.0f64..1.0, 72)) {
        let m = SpinManifold::d52();
        let rho = random_state(&m, &parts);
        for settings in [standard_settings(), complete_settings()] {
            let groups = projector_set(&m, &settings).unwrap();
            for p in born_probabilities(&rho, &groups).unwrap() {
                prop_assert!(p.iter().all(|&x| x >= -1e-12));
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(a in prop::collection::vec(-1.0f64..1.0, 72), b in prop::collection::vec(-1.0f64..1.0, 72)) {
        let m = SpinManifold::d52();
        let (x, y) = (random_state(&m, &a), random_state(&m, &b));
        let (f, g) = (uhlmann_fidelity(&x, &y).unwrap(), uhlmann_fidelity(&y, &x).unwrap());
        prop_assert!((f - g).abs() < 1e-8);
        prop_assert!((-1e-12..=1.0 + 1e-9).contains(&f));
        prop_assert!((uhlmann_fidelity(&x, &x).unwrap() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn pure_state_fidelity_is_overlap() {
    let m = SpinManifold::d52();
    let v = DVector::from_fn(6, |i, _| C64::new(1.0 + i as f64, 0.5 * i as f64));
    let v = &v / c(v.norm(), 0.0);
    let rho = DensityMatrix::from_matrix(&v * v.adjoint(), Basis::Spin(m)).unwrap();
    let mixed = DensityMatrix::maximally_mixed(Basis::Spin(m));
    assert_abs_diff_eq!(uhlmann_fidelity(&rho, &mixed).unwrap(), 1.0 / 6.0, epsilon = 1e-12);
}
