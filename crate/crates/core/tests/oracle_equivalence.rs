//! Equivalence of the rank-one pulse engine against the full-projection
//! oracle on small lattices, over random pulse sequences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spincorr_core::oracle::{compare_states, oracle_apply_pulse, ExtendedCovariance};
use spincorr_core::{apply_pulse, Axis, CovarianceState, EnsembleConfig, Pulse};

fn random_pulse(rng: &mut ChaCha8Rng, config: &EnsembleConfig, eta: f64) -> Pulse {
    let p = rng.random_range(0..=config.n_s / 2);
    let axis = [Axis::X, Axis::Y, Axis::Z][rng.random_range(0..3)];
    let coupling = rng.random_range(0.0..1.0);
    Pulse::new(p, axis, coupling, eta, config).unwrap()
}

fn run_equivalence(n_s: usize, pulses: usize, eta: f64, seed: u64) -> f64 {
    let config = EnsembleConfig::new(n_s, 10, 1.0, f64::INFINITY).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = CovarianceState::mixed(&config);
    let mut ext = ExtendedCovariance::from_state(&state, &config).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..pulses {
        let pulse = random_pulse(&mut rng, &config, eta);
        apply_pulse(&mut state, &config, &pulse).unwrap();
        ext = oracle_apply_pulse(&ext, &config, &pulse).unwrap();
        worst = worst.max(compare_states(&state, &ext).unwrap());
        assert!(ext.max_cross_component() < 1e-12);
    }
    worst
}

#[test]
fn twenty_random_pulses_agree_to_1e10() {
    for &n_s in &[8usize, 16] {
        for &eta in &[0.0, 0.01] {
            for seed in 0..3 {
                let worst = run_equivalence(n_s, 20, eta, 40 + seed);
                assert!(
                    worst < 1e-10,
                    "n_s={n_s} eta={eta} seed={seed}: max deviation {worst:e}"
                );
            }
        }
    }
}

#[test]
fn five_pulse_example_on_eight_sites() {
    let worst = run_equivalence(8, 5, 0.0, 1);
    assert!(worst < 1e-10, "max deviation {worst:e}");
}

#[test]
fn spin_half_and_larger_spin_also_agree() {
    for &j in &[0.5, 1.5] {
        let config = EnsembleConfig::new(10, 4, j, f64::INFINITY).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut state = CovarianceState::mixed(&config);
        let mut ext = ExtendedCovariance::from_state(&state, &config).unwrap();
        for _ in 0..10 {
            let pulse = random_pulse(&mut rng, &config, 0.005);
            apply_pulse(&mut state, &config, &pulse).unwrap();
            ext = oracle_apply_pulse(&ext, &config, &pulse).unwrap();
        }
        assert!(compare_states(&state, &ext).unwrap() < 1e-10);
    }
}
