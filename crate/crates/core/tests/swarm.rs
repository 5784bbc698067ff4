//! Annealed particle swarm: penalties, cooling, Metropolis acceptance and the
//! reduction to plain PSO.

use masr_core::geometry::{MovementRegion, Position3};
use masr_core::swarm::{
    acceptance_probability, fitness, sa_accept, sa_pso, temperature_step, violation_set_size, Evaluation, SwarmConfig,
};
use masr_core::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn line(k: usize, step: f64) -> Vec<Position3> {
    (0..k).map(|i| Position3::new(i as f64 * step, 0.0, 0.0)).collect()
}

/// Smooth bowl with its peak at `target`, no side constraints.
fn bowl(target: [f64; 2]) -> impl Fn(&[Position3]) -> Evaluation {
    move |p: &[Position3]| Evaluation {
        value: -p.iter().map(|q| (q.x - target[0]).powi(2) + (q.y - target[1]).powi(2)).sum::<f64>(),
        violations: 0,
    }
}

fn small(annealing: bool, temperature: f64) -> SwarmConfig {
    SwarmConfig { particles: 12, iterations: 30, initial_temperature: temperature, annealing, ..SwarmConfig::default() }
}

proptest! {
    #[test]
    fn violation_count_on_a_line(k in 1usize..8, step in 0.01f64..1.0, d_min in 0.0f64..3.0) {
        // Pairs `g` apart are `g * step` apart; there are `k - g` of them.
        let expect: usize = (1..k).filter(|&g| (g as f64) * step < d_min).map(|g| k - g).sum();
        prop_assert_eq!(violation_set_size(&line(k, step), d_min), expect);
        let f = fitness(Evaluation { value: 2.0, violations: 3 }, &line(k, step), d_min, 0.5);
        prop_assert!((f - (2.0 - 0.5 * (expect + 3) as f64)).abs() < 1e-12);
    }

    #[test]
    fn cooling_is_the_running_product(t0 in 0.1f64..10.0, total in 1usize..60) {
        let mut t = t0;
        for q in 0..total {
            let next = temperature_step(t, q, total);
            prop_assert!((next - t * (total - q) as f64 / total as f64).abs() <= 1e-12 * t0);
            prop_assert!(next <= t * (1.0 + f64::EPSILON));
            t = next;
        }
        // prod_{q < Q} (Q - q) / Q = Q! / Q^Q
        let closed = (1..=total).map(|i| i as f64 / total as f64).product::<f64>() * t0;
        prop_assert!((t - closed).abs() <= 1e-12 * t0);
        prop_assert_eq!(temperature_step(t0, total, total), 0.0);
    }
}

#[test]
fn metropolis_frequency_matches_the_acceptance_probability() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (delta, t) in [(0.1, 1.0), (0.5, 0.5), (2.0, 1.5), (0.05, 0.02), (1.0, 10.0)] {
        let p = acceptance_probability(1.0, 1.0 - delta, t);
        assert!((p - (-delta / t).exp()).abs() < 1e-15);
        let draws = 100_000;
        let hits = (0..draws).filter(|_| sa_accept(1.0, 1.0 - delta, t, &mut rng)).count();
        let freq = hits as f64 / draws as f64;
        assert!((freq - p).abs() < 0.01, "delta {delta} t {t}: {freq} vs {p}");
    }
    assert_eq!(acceptance_probability(1.0, 1.5, 0.3), 1.0);
    assert_eq!(acceptance_probability(1.0, 0.5, 0.0), 0.0);
    assert!(sa_accept(1.0, 1.0, 0.0, &mut rng));
}

#[test]
fn annealing_without_accepted_worse_moves_is_plain_pso() {
    let region = MovementRegion::square(0.3).unwrap();
    let start = region.grid_placement(3, 0.05).unwrap();
    let mut identical = 0;
    for seed in 0..10 {
        for temperature in [1e-12, 1.0] {
            let sa = sa_pso(bowl([0.05, -0.02]), &start, &region, 0.05, &small(true, temperature), seed).unwrap();
            let pso = sa_pso(bowl([0.05, -0.02]), &start, &region, 0.05, &small(false, temperature), seed).unwrap();
            assert_eq!(pso.accepted_worse, 0);
            if sa.accepted_worse == 0 {
                assert_eq!(sa, pso);
                identical += 1;
            }
        }
    }
    assert!(identical >= 10);
}

#[test]
fn search_returns_best_ever_feasible_configuration() {
    let region = MovementRegion::square(0.3).unwrap();
    let start = region.grid_placement(4, 0.05).unwrap();
    let d_min = 0.05;
    for seed in 0..5 {
        for annealing in [true, false] {
            let f = bowl([0.0, 0.0]);
            let out = sa_pso(&f, &start, &region, d_min, &small(annealing, 1.0), seed).unwrap();
            assert!(out.trace.windows(2).all(|w| w[1] >= w[0]));
            assert_eq!(*out.trace.last().unwrap(), out.fitness);
            assert_eq!(out.trace.len(), 31);
            assert!(out.positions.iter().all(|p| region.contains(p)));
            assert_eq!(violation_set_size(&out.positions, d_min), 0);
            assert!((out.fitness - f(&out.positions).value).abs() < 1e-12);
            assert!(out.fitness >= f(&start).value);
            // Four antennas pulled toward one point end up packed at the spacing limit.
            assert!(masr_core::geometry::min_pairwise_distance(&out.positions) < 2.0 * d_min);
        }
    }
}

#[test]
fn impossible_spacing_is_reported() {
    let region = MovementRegion::square(0.01).unwrap();
    let start = line(3, 0.0);
    let cfg = small(true, 1.0);
    assert_eq!(sa_pso(bowl([0.0, 0.0]), &start, &region, 0.5, &cfg, 1), Err(Error::SpacingInfeasible));
}

#[test]
fn runs_are_reproducible() {
    let region = MovementRegion::square(0.3).unwrap();
    let start = region.grid_placement(4, 0.05).unwrap();
    let a = sa_pso(bowl([0.1, 0.1]), &start, &region, 0.05, &small(true, 1.0), 42).unwrap();
    let b = sa_pso(bowl([0.1, 0.1]), &start, &region, 0.05, &small(true, 1.0), 42).unwrap();
    assert_eq!(a, b);
}
