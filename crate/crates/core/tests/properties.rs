use proptest::prelude::*;

use qgv_core::certify::{delta_bound, epsilon_at_confidence, kl_divergence, loglog_fit};
use qgv_core::channels::{apply, channel_to_chi, noisy_gate, process_fidelity, NoiseModel};
use qgv_core::linalg::{eig_hermitian, tensor, CMat, C64};
use qgv_core::verification::{gates, DensityMatrix};
use qgv_core::Error;

fn cmat(n: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
        .prop_map(move |v| CMat::from_vec(n, n, v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap())
}

fn hermitian(n: usize) -> impl Strategy<Value = CMat> {
    cmat(n).prop_map(|m| m.hermitian_part())
}

fn noise() -> impl Strategy<Value = NoiseModel> {
    prop_oneof![
        (0.0f64..1.0).prop_map(|p| NoiseModel::Depolarizing { p }),
        (0.0f64..1.0).prop_map(|gamma| NoiseModel::AmplitudeDamping { gamma }),
        ((-1.0f64..1.0, -1.0f64..1.0, 0.1f64..1.0), -3.0f64..3.0).prop_map(|((x, y, z), angle)| {
            let n = (x * x + y * y + z * z).sqrt();
            NoiseModel::OverRotation { axis: [x / n, y / n, z / n], angle }
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn tensor_mixed_product(a in cmat(2), b in cmat(2), c in cmat(2), d in cmat(2)) {
        let lhs = &tensor(&a, &b) * &tensor(&c, &d);
        let rhs = tensor(&(&a * &c), &(&b * &d));
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn eig_reconstructs(h in hermitian(4)) {
        let e = eig_hermitian(&h).unwrap();
        prop_assert!(e.reconstruct().max_abs_diff(&h) < 1e-10);
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        for k in 0..4 {
            let v = e.vector(k);
            let hv = h.apply(&v).unwrap();
            for (x, y) in hv.iter().zip(&v) {
                prop_assert!((x - y * e.values[k]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn channels_preserve_trace_and_positivity(model in noise(), a in cmat(2)) {
        let ch = noisy_gate(&gates::u_a(), &model).unwrap();
        let rho = DensityMatrix::new({
            let p = &a.adjoint() * &a;
            let t = p.trace().re;
            p.scale_re(1.0 / t)
        }).unwrap();
        let out = apply(&ch, &rho).unwrap();
        prop_assert!((out.matrix().trace().re - 1.0).abs() < 1e-12);
        let chi = channel_to_chi(&ch);
        prop_assert!(chi.tp_residual() < 1e-10);
        prop_assert!(chi.min_eigenvalue() > -1e-10);
        let f = process_fidelity(&chi, &chi).unwrap();
        prop_assert!(f <= 1.0 + 1e-12);
    }

    #[test]
    fn pinsker(x in 0.0f64..1.0, y in 0.001f64..0.999) {
        prop_assert!(kl_divergence(x, y).unwrap() >= 2.0 * (x - y).powi(2) - 1e-15);
    }

    #[test]
    fn all_pass_bound_is_power(n in 1u64..10_000, eps in 1e-6f64..1.0, nu in 0.01f64..1.0) {
        let b = delta_bound(n, n, eps, nu).unwrap();
        prop_assert!((b - (1.0 - eps * nu).powi(n as i32)).abs() < 1e-12);
    }

    #[test]
    fn bound_monotone_in_eps_and_m(n in 20u64..2000, frac in 0.0f64..0.2, nu in 0.1f64..1.0) {
        let m = n - (frac * n as f64) as u64;
        let lo = (1.0 - m as f64 / n as f64) / nu;
        prop_assume!(lo < 0.95);
        let grid: Vec<f64> = (1..=20).map(|k| lo + (1.0 - lo) * k as f64 / 20.0).filter(|&e| e <= 1.0).collect();
        let vals: Vec<f64> = grid.iter().map(|&e| delta_bound(m, n, e, nu).unwrap()).collect();
        prop_assert!(vals.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        if m < n {
            let e = grid[grid.len() - 1];
            prop_assert!(delta_bound(m + 1, n, e, nu).unwrap() <= delta_bound(m, n, e, nu).unwrap() + 1e-15);
        }
    }

    #[test]
    fn inversion_is_tight(n in 10u64..5000, frac in 0.0f64..0.1, nu in 0.1f64..1.0, delta in 1e-4f64..0.3) {
        let m = n - (frac * n as f64) as u64;
        match epsilon_at_confidence(m, n, delta, nu) {
            Ok(eps) => {
                prop_assert!(delta_bound(m, n, eps, nu).unwrap() <= delta);
                match delta_bound(m, n, eps - 1e-6, nu) {
                    Ok(b) => prop_assert!(b > delta),
                    Err(Error::EpsilonTooSmall { .. }) => {}
                    Err(e) => prop_assert!(false, "{e}"),
                }
            }
            Err(Error::NotCertifiable(_)) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn fit_recovers_planted_slope(slope in -2.0f64..0.5, intercept in -3.0f64..3.0) {
        let pts: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0, 160.0, 320.0]
            .iter()
            .map(|&n: &f64| (n, (intercept + slope * n.ln()).exp()))
            .collect();
        let fit = loglog_fit(&pts, (0.0, 1e9)).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-10);
        prop_assert!((fit.intercept - intercept).abs() < 1e-9);
    }
}
