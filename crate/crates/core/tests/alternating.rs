//! End-to-end alternating optimization on reduced swarms.

use masr_core::ao::{run_seed, AO_STREAM, users_at, verify_robustness, Scheme};
use masr_core::rates::{robust_objective, secondary_qos_met, Scenario};
use masr_core::swarm::{violation_set_size, SwarmConfig};
use masr_core::system::SystemConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(scenario: Scenario) -> SystemConfig {
    SystemConfig {
        scenario,
        swarm: SwarmConfig { particles: 12, iterations: 12, ..SwarmConfig::default() },
        ..SystemConfig::default()
    }
}

fn zero() -> f64 {
    0.0
}

#[test]
fn every_scheme_yields_a_verified_monotone_design() {
    for scenario in [Scenario::Psr, Scenario::Csr] {
        let cfg = config(scenario);
        let params = cfg.scenario_params();
        let region = cfg.region().unwrap();
        let initial = cfg.initial_positions().unwrap();
        for scheme in Scheme::ALL {
            for seed in 0..2 {
                let (scene, r) = run_seed(&cfg, scheme, seed, &zero).unwrap();
                let tag = format!("{scenario:?} {} seed {seed}", scheme.name());
                assert!(r.is_monotone(1e-9 * r.robust_rate.abs()), "{tag}: {:?}", r.trace);
                assert_eq!(r.trace.len(), r.ao_iterations() + 1);
                assert_eq!(*r.trace.last().unwrap(), r.robust_rate);
                assert!(r.ao_iterations() <= cfg.ao_max_iters);

                let d = &r.design;
                assert!(d.w.norm_squared() <= cfg.power_watts() * (1.0 + 1e-6), "{tag}: power");
                assert!(d.positions.iter().all(|p| region.contains(p)), "{tag}: region");
                assert_eq!(violation_set_size(&d.positions, cfg.min_spacing_m() * (1.0 - 1e-12)), 0, "{tag}: spacing");
                let psi = d.phases.to_complex();
                assert!(psi.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
                if scheme == Scheme::Fpa {
                    assert_eq!(d.positions, initial);
                }

                let users = users_at(&cfg, &scene, &d.positions).unwrap();
                assert!((robust_objective(&params, &users, &d.w, &psi) - r.robust_rate).abs() < 1e-9 * r.robust_rate);
                assert!(secondary_qos_met(&params, &users, &d.w, &psi, 1e-6), "{tag}: secondary QoS");
                let report = verify_robustness(&params, &users, &d.w, &psi, 500, &mut ChaCha8Rng::seed_from_u64(seed));
                assert!(report.passed(), "{tag}: {report:?}");
                assert!(report.min_sampled_rate >= r.robust_rate - 1e-9);
            }
        }
    }
}

#[test]
fn fixed_phases_scheme_keeps_its_random_draw() {
    let cfg = config(Scenario::Psr);
    let (_, a) = run_seed(&cfg, Scheme::RandomPsi, 3, &zero).unwrap();
    assert!(a.iterations.iter().all(|it| it.passive.is_none() && it.swarm.is_some()));
    let (_, b) = run_seed(&cfg, Scheme::Fpa, 3, &zero).unwrap();
    assert!(b.iterations.iter().all(|it| it.passive.is_some() && it.swarm.is_none()));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    rng.set_stream(AO_STREAM);
    let drawn: Vec<usize> = (0..cfg.ris_elements).map(|_| rng.random_range(0..cfg.phase_levels)).collect();
    assert_eq!(a.design.phases.indices, drawn);
}

#[test]
fn runs_are_deterministic_per_seed() {
    for scenario in [Scenario::Psr, Scenario::Csr] {
        let cfg = config(scenario);
        let (sa, a) = run_seed(&cfg, Scheme::ProposedSapso, 7, &zero).unwrap();
        let (sb, b) = run_seed(&cfg, Scheme::ProposedSapso, 7, &zero).unwrap();
        assert_eq!(sa, sb);
        assert_eq!(a, b);
        let (_, c) = run_seed(&cfg, Scheme::ProposedSapso, 8, &zero).unwrap();
        assert_ne!(a.design, c.design);
    }
}

#[test]
fn two_primary_users_are_served_jointly() {
    let mut cfg = config(Scenario::Psr);
    cfg.users.push([0.0, 80.0, 0.0]);
    let params = cfg.scenario_params();
    let (scene, r) = run_seed(&cfg, Scheme::ProposedSapso, 1, &zero).unwrap();
    let users = users_at(&cfg, &scene, &r.design.positions).unwrap();
    assert_eq!(users.len(), 2);
    let psi = r.design.phases.to_complex();
    let per_user: Vec<f64> = users
        .iter()
        .map(|u| masr_core::rates::robust_rate(&params, &u.channels, &r.design.w, &psi, &u.uncertainty))
        .collect();
    assert!((per_user.iter().copied().fold(f64::INFINITY, f64::min) - r.robust_rate).abs() < 1e-9 * r.robust_rate);
    assert!(r.is_monotone(1e-9 * r.robust_rate));
    assert!(secondary_qos_met(&params, &users, &r.design.w, &psi, 1e-6));
}

#[test]
fn unreachable_secondary_threshold_is_infeasible() {
    let cfg = SystemConfig { gamma_p_min_db: 90.0, ..config(Scenario::Psr) };
    let err = run_seed(&cfg, Scheme::Fpa, 0, &zero).unwrap_err();
    assert!(matches!(err, masr_core::Error::Infeasible { .. }), "{err}");
}
