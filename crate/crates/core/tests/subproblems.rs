//! Transmit and passive SCA against closed forms, enumeration and tangency.

use masr_core::ao::{scene_for_seed, users_at};
use masr_core::beamforming::{build_passive_subproblem, build_transmit_subproblem, initial_beamformer, sca_passive, sca_transmit, ScaOptions};
use masr_core::linalg::CVec;
use masr_core::rates::{robust_objective, secondary_qos_met, PhaseVector, Scenario, UserState};
use masr_core::system::SystemConfig;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn setup(scenario: Scenario, antennas: usize, ris_elements: usize, seed: u64) -> (SystemConfig, Vec<UserState>) {
    let config = SystemConfig { scenario, antennas, ris_elements, ..SystemConfig::default() };
    let scene = scene_for_seed(&config, seed).unwrap();
    let users = users_at(&config, &scene, &config.initial_positions().unwrap()).unwrap();
    (config, users)
}

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> CVec {
    CVec::from_fn(n, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// With one antenna the robust rate depends on `|w|` only and grows with it, so the
/// optimum spends the full budget.
#[test]
fn single_antenna_reaches_full_power_closed_form() {
    let mut checked = 0;
    for scenario in [Scenario::Psr, Scenario::Csr] {
        for seed in 0..4 {
            let (config, users) = setup(scenario, 1, 8, seed);
            let params = config.scenario_params();
            let power = config.power_watts();
            let psi = PhaseVector::zeros(8, 8).to_complex();
            let Ok(w_full) = initial_beamformer(&params, &users, &psi, power) else { continue };
            let optimum = robust_objective(&params, &users, &w_full, &psi);
            // Any phase of the scalar beamformer is optimal at full power.
            let rotated = w_full.map(|z| z * Complex64::from_polar(1.0, 1.3));
            assert!((robust_objective(&params, &users, &rotated, &psi) - optimum).abs() < 1e-9);

            let w0 = w_full.scale(0.8);
            if !secondary_qos_met(&params, &users, &w0, &psi, 0.0) {
                continue;
            }
            let start = robust_objective(&params, &users, &w0, &psi);
            assert!(start < optimum);
            let out = sca_transmit(&params, &users, &psi, &w0, power, &config.sca).unwrap();
            let got = robust_objective(&params, &users, &out.w, &psi);
            assert!(out.w.norm_squared() <= power * (1.0 + 1e-6));
            assert!((optimum - got) / optimum < 1e-3, "{scenario:?} seed {seed}: {got} vs closed form {optimum}");
            assert!(out.trace.is_monotone(1e-9));
            checked += 1;
        }
    }
    assert!(checked >= 4);
}

/// With a single RIS element the passive design must match exhaustive search over the
/// eight grid phases, restricted to the phases meeting the secondary QoS.
#[test]
fn single_element_matches_enumeration() {
    let mut compared = 0;
    for scenario in [Scenario::Psr, Scenario::Csr] {
        for seed in 0..6 {
            let (config, users) = setup(scenario, 4, 1, seed);
            let params = config.scenario_params();
            let power = config.power_watts();
            let start = PhaseVector::zeros(1, 8);
            let Ok(w) = initial_beamformer(&params, &users, &start.to_complex(), power) else { continue };
            let best = (0..8)
                .map(|i| PhaseVector::new(vec![i], 8).unwrap().to_complex())
                .filter(|psi| secondary_qos_met(&params, &users, &w, psi, 1e-9))
                .map(|psi| robust_objective(&params, &users, &w, &psi))
                .fold(f64::NEG_INFINITY, f64::max);
            let out = sca_passive(&params, &users, &w, &start, power, &config.sca).unwrap();
            let got = robust_objective(&params, &users, &w, &out.phases.to_complex());
            assert!((got - out.objective).abs() < 1e-12);
            assert!((got - best).abs() <= 1e-9 * best.abs(), "{scenario:?} seed {seed}: {got} vs enumerated {best}");
            compared += 1;
        }
    }
    assert!(compared >= 8);
}

/// The surrogate of every robust constraint equals the exact square at the expansion
/// point and lies below it elsewhere.
#[test]
fn surrogates_are_tangent_minorants() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for scenario in [Scenario::Psr, Scenario::Csr] {
        let (config, users) = setup(scenario, 4, 8, 2);
        let params = config.scenario_params();
        let power = config.power_watts();
        let phases = PhaseVector::new((0..8).map(|_| rng.random_range(0..8)).collect(), 8).unwrap();
        let psi = phases.to_complex();
        let w = initial_beamformer(&params, &users, &psi, power).unwrap();

        let tx = build_transmit_subproblem(&params, &users, &psi, &w, power).unwrap();
        let mut c_r = vec![vec![0.0; 8]; 8];
        for (m, &i) in phases.indices.iter().enumerate() {
            c_r[m][i] = 1.0;
        }
        let rx = build_passive_subproblem(&params, &users, &w, &c_r, 8, 1.0, power).unwrap();
        for (expansion, surrogates) in [(&tx.expansion, &tx.surrogates), (&rx.expansion, &rx.surrogates)] {
            assert!(!surrogates.is_empty());
            for s in surrogates {
                let n = s.coupling.len();
                for _ in 0..20 {
                    let x = random_vec(n, &mut rng).scale(0.1);
                    let exact = s.exact(expansion, &x);
                    assert!((s.tangent(expansion, &x) - exact).abs() <= 1e-9 * exact.abs().max(1.0), "{}", s.label);
                    let y: Vec<f64> = expansion.iter().map(|v| v + 0.2 * rng.sample::<f64, _>(StandardNormal)).collect();
                    let exact = s.exact(&y, &x);
                    assert!(s.tangent(&y, &x) <= exact + 1e-9 * exact.abs().max(1.0), "{}", s.label);
                }
            }
        }
    }
}

#[test]
fn sca_loops_never_lose_ground() {
    let opts = ScaOptions::default();
    for scenario in [Scenario::Psr, Scenario::Csr] {
        for seed in 0..3 {
            let (config, users) = setup(scenario, 4, 8, seed);
            let params = config.scenario_params();
            let power = config.power_watts();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phases = PhaseVector::new((0..8).map(|_| rng.random_range(0..8)).collect(), 8).unwrap();
            let psi = phases.to_complex();
            let Ok(w0) = initial_beamformer(&params, &users, &psi, power) else { continue };
            let f0 = robust_objective(&params, &users, &w0, &psi);
            let tx = sca_transmit(&params, &users, &psi, &w0, power, &opts).unwrap();
            assert!(tx.trace.is_monotone(1e-9));
            assert!(robust_objective(&params, &users, &tx.w, &psi) >= f0 - 1e-9);
            assert!(secondary_qos_met(&params, &users, &tx.w, &psi, 1e-6));

            let g0 = robust_objective(&params, &users, &tx.w, &psi);
            let rx = sca_passive(&params, &users, &tx.w, &phases, power, &opts).unwrap();
            assert!(rx.objective >= g0 - 1e-9, "{scenario:?} seed {seed}: {} < {g0}", rx.objective);
            assert!(secondary_qos_met(&params, &users, &tx.w, &rx.phases.to_complex(), 1e-9));
            assert!(rx.phases.to_complex().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        }
    }
}
