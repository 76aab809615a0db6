//! Randomised invariants.

mod common;

use cnlse_core::classify::{case1_coeffs, case2_coeffs, case3_coeffs, classify_q1};
use cnlse_core::fields::DispersionMatrix;
use cnlse_core::gauge::{apply_gauge, compute_generator, invert_gauge, transformed_spec_derivative};
use cnlse_core::{DerivativeSpec, DriftCubicSpec, NonlinearitySpec};
use common::{periodic_grid, SmoothState};
use ndarray::{Array2, Array3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn matrix(q: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-2.0..2.0f64, q * q).prop_map(move |v| Array2::from_shape_vec((q, q), v).unwrap())
}

fn dispersion(q: usize) -> impl Strategy<Value = DispersionMatrix> {
    prop::collection::vec(prop_oneof![0.2..3.0f64, -3.0..-0.2f64], q).prop_map(|v| DispersionMatrix::new(v).unwrap())
}

fn species_and(q_max: usize) -> impl Strategy<Value = (Array2<f64>, Array2<f64>, DispersionMatrix, Vec<f64>)> {
    (1..=q_max).prop_flat_map(|q| (matrix(q), matrix(q), dispersion(q), prop::collection::vec(-2.0..2.0f64, q)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn derivative_is_linear(a in -3.0..3.0f64, b in -3.0..3.0f64, seed in 0u64..1000) {
        let grid = periodic_grid(64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = SmoothState::random(&mut rng, 2, 1.0);
        let f = s.sample(&grid, |k, x| s.rho_at(k, x));
        let (f0, f1) = (f.row(0).to_vec(), f.row(1).to_vec());
        let combo: Vec<f64> = f0.iter().zip(&f1).map(|(x, y)| a * x + b * y).collect();
        let d = grid.derivative(&combo).unwrap();
        let (d0, d1) = (grid.derivative(&f0).unwrap(), grid.derivative(&f1).unwrap());
        for i in 0..64 {
            prop_assert!((d[i] - a * d0[i] - b * d1[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn antiderivative_inverts_derivative(seed in 0u64..1000, anchor in 0usize..64) {
        let grid = periodic_grid(64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = SmoothState::random(&mut rng, 1, 1.0);
        let f = s.sample(&grid, |k, x| s.rho_at(k, x)).row(0).to_vec();
        let g = grid.antiderivative(&f, anchor).unwrap();
        prop_assert!(g[anchor].abs() < 1e-13);
        let back = grid.derivative(&{
            // Remove the ramp before differentiating the periodic part.
            let mean = f.iter().sum::<f64>() / 64.0;
            g.iter().enumerate().map(|(i, v)| v - mean * (grid.x(i) - grid.x(anchor))).collect::<Vec<_>>()
        }).unwrap();
        let mean = f.iter().sum::<f64>() / 64.0;
        for i in 0..64 {
            prop_assert!((back[i] + mean - f[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn gauge_is_unitary(seed in 0u64..1000, q in 1usize..=3, family_b in any::<bool>()) {
        let grid = periodic_grid(128);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = SmoothState::random(&mut rng, q, 0.5);
        let spec = if family_b {
            NonlinearitySpec::Derivative(DerivativeSpec::new(
                Array2::zeros((q, q)), Array2::zeros((q, q)),
                Array2::from_shape_fn((q, q), |(k, j)| 0.3 * (k as f64 + 1.0) - 0.2 * j as f64 + seed as f64 * 1e-3),
                Array3::zeros((q, q, q)),
            ).unwrap())
        } else {
            NonlinearitySpec::DriftCubic(DriftCubicSpec::new((0..q).map(|k| 0.7 * k as f64 - 0.4).collect(), vec![0.0; q]).unwrap())
        };
        let a = DispersionMatrix::uniform(q, 0.9).unwrap();
        let psi = state.fields(&grid);
        let gen = compute_generator(&spec, &state.hydro(&grid), &a, (seed % 128) as usize).unwrap();
        let phi = apply_gauge(&psi, &gen).unwrap().fields;
        for (p, r) in phi.densities().iter().zip(psi.densities().iter()) {
            prop_assert!((p - r).abs() < 1e-14);
        }
        let back = invert_gauge(&phi, &gen).unwrap();
        for (b, p) in back.data().iter().zip(psi.data()) {
            prop_assert!((b - p).norm() < 1e-12);
        }
    }

    #[test]
    fn case1_transforms_to_zero((delta, _g, a, _b) in species_and(3)) {
        let spec = case1_coeffs(&delta, &a).unwrap();
        let t = transformed_spec_derivative(&spec, &a).unwrap();
        prop_assert!(t.max_abs() < 1e-12);
    }

    #[test]
    fn case2_decouples((delta, _g, a, beta_diag) in species_and(3)) {
        let (spec, eta) = case2_coeffs(&delta, &beta_diag, &a).unwrap();
        let t = transformed_spec_derivative(&spec, &a).unwrap();
        prop_assert!(t.max_cross_species() < 1e-12);
        for k in 0..a.species() {
            prop_assert_eq!(eta[k], (beta_diag[k] + 2.0 * delta[[k, k]]) / (2.0 * a[k]));
            prop_assert_eq!(t.drift_self()[[k, k]], beta_diag[k] + 2.0 * delta[[k, k]]);
        }
    }

    #[test]
    fn case3_is_a_current_coupling((delta, gamma, a, _b) in species_and(3)) {
        let (spec, eta) = case3_coeffs(&delta, &gamma, &a).unwrap();
        let t = transformed_spec_derivative(&spec, &a).unwrap();
        prop_assert!(t.drift_self().iter().all(|v| v.abs() < 1e-12));
        prop_assert!(t.quartic().iter().all(|v| v.abs() < 1e-12));
        let q = a.species();
        for k in 0..q {
            for j in 0..q {
                // sum_j eta_kj J_j with J_j = 2 A_j rho_j S_j'.
                prop_assert!((t.drift_cross()[[k, j]] - 2.0 * a[j] * eta[[k, j]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn classification_is_scale_invariant(b in -5.0..5.0f64, g in -5.0..5.0f64, d in -5.0..5.0f64, c in 1e-3..1e3f64) {
        for (b, g, d) in [(b, g, d), (b, -4.0 * d - b, d), (b, -b - 4.0 * d / 3.0, d), (b, g, 0.0)] {
            prop_assert_eq!(classify_q1(c * b, c * g, c * d, 0.0, 1e-9), classify_q1(b, g, d, 0.0, 1e-9));
        }
    }
}
