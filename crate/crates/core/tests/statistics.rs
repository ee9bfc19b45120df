//! Monte-Carlo behaviour of the simulator and the campaign driver.

use qgv_core::certify::epsilon_at_confidence;
use qgv_core::channels::{calibrate_noise, noisy_gate, unitary_channel, NoiseKind, NoiseModel};
use qgv_core::linalg::pauli;
use qgv_core::simulate::{born_sample, campaign, run_qgv, run_qgv_count, RngSpec};
use qgv_core::verification::{cnot_strategy, gates, kets, pass_probability, single_qubit_strategy, DensityMatrix};

#[test]
fn empirical_pass_rate_converges() {
    let n = 100_000u64;
    let configs = [
        (single_qubit_strategy(&gates::u_a()).unwrap(), NoiseModel::Depolarizing { p: 0.02 * 4.0 / 3.0 }),
        (single_qubit_strategy(&gates::u_b()).unwrap(), NoiseModel::AmplitudeDamping { gamma: 0.1 }),
        (
            single_qubit_strategy(&gates::u_a()).unwrap(),
            NoiseModel::OverRotation { axis: [0.0, 0.0, 1.0], angle: 0.4 },
        ),
        (cnot_strategy().unwrap(), NoiseModel::Depolarizing { p: 0.1 }),
        (cnot_strategy().unwrap(), NoiseModel::AmplitudeDamping { gamma: 0.05 }),
    ];
    for (i, (s, model)) in configs.iter().enumerate() {
        let dev = noisy_gate(s.gate(), model).unwrap();
        let p = pass_probability(s, &dev).unwrap();
        let m = run_qgv_count(s, &dev, n, &mut RngSpec::new(99, i as u64).rng()).unwrap();
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        let freq = m as f64 / n as f64;
        assert!((freq - p).abs() <= 4.0 * sigma, "config {i}: {freq} vs {p}");
    }
}

#[test]
fn calibrated_device_pass_rate() {
    let u = gates::u_a();
    let s = single_qubit_strategy(&u).unwrap();
    let dev = noisy_gate(&u, &calibrate_noise(0.98, NoiseKind::Depolarizing, 1).unwrap()).unwrap();
    let recs = run_qgv(&s, &dev, 10_000, &mut RngSpec::new(5, 5).rng()).unwrap();
    let m = recs.iter().filter(|r| r.passed).count() as f64;
    let p: f64 = 1.0 - 0.02 * 4.0 / 3.0 / 2.0;
    let sigma = (p * (1.0 - p) / 1e4).sqrt();
    assert!((m / 1e4 - p).abs() <= 4.0 * sigma);
}

#[test]
fn count_and_records_draw_identically() {
    let s = cnot_strategy().unwrap();
    let dev = noisy_gate(s.gate(), &NoiseModel::Depolarizing { p: 0.2 }).unwrap();
    let recs = run_qgv(&s, &dev, 3000, &mut RngSpec::new(1, 7).rng()).unwrap();
    let m = run_qgv_count(&s, &dev, 3000, &mut RngSpec::new(1, 7).rng()).unwrap();
    assert_eq!(recs.iter().filter(|r| r.passed).count() as u64, m);
}

#[test]
fn born_rule_chi_square_on_mixed_state() {
    let rho = DensityMatrix::maximally_mixed(4);
    let obs = pauli::parse("XY").unwrap();
    let mut rng = RngSpec::new(3, 0).rng();
    let n = 100_000;
    let plus = (0..n).filter(|_| born_sample(&rho, &obs, &mut rng).unwrap() == 1).count() as f64;
    let expected = n as f64 / 2.0;
    let chi2 = 2.0 * (plus - expected).powi(2) / expected;
    // one degree of freedom, p > 0.001 ⇔ χ² < 10.83
    assert!(chi2 < 10.83, "χ² = {chi2}");

    let plus_state = DensityMatrix::pure(&kets::plus()).unwrap();
    let z = pauli::z();
    let k = (0..n).filter(|_| born_sample(&plus_state, &z, &mut rng).unwrap() == 1).count() as f64;
    assert!((k / n as f64 - 0.5).abs() <= 4.0 * (0.25 / n as f64).sqrt());
}

#[test]
fn ideal_campaign_matches_closed_form() {
    let u = gates::u_b();
    let s = single_qubit_strategy(&u).unwrap();
    let grid = [10, 50, 231, 1000];
    let c = campaign(&s, &unitary_channel(&u), &grid, 5, 0.01, 4).unwrap();
    for (&n, reps) in grid.iter().zip(&c.results) {
        let closed = (1.0 - 0.01f64.powf(1.0 / n as f64)) * 1.5;
        for r in reps {
            assert_eq!(r.n_passed, n);
            assert!((r.epsilon - closed).abs() < 1e-9, "N = {n}: {} vs {closed}", r.epsilon);
        }
    }
}

#[test]
fn campaign_is_thread_count_independent() {
    let u = gates::u_a();
    let s = single_qubit_strategy(&u).unwrap();
    let dev = noisy_gate(&u, &NoiseModel::Depolarizing { p: 0.05 }).unwrap();
    let grid = [20, 40, 80, 160];
    let a = campaign(&s, &dev, &grid, 10, 0.01, 11).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| campaign(&s, &dev, &grid, 10, 0.01, 11).unwrap());
    assert_eq!(a, b);
    for (&n, reps) in grid.iter().zip(&a.results) {
        for r in reps {
            let e = epsilon_at_confidence(r.n_passed, n, 0.01, s.nu()).map_or(1.0, |e| e);
            assert_eq!(e, r.epsilon);
        }
    }
}
