//! Simulated-annealing particle swarm search over antenna positions.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{MovementRegion, Position3};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwarmConfig {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Fitness deducted per violated constraint.
    pub penalty: f64,
    pub initial_temperature: f64,
    /// Metropolis acceptance of worse global bests; plain PSO when false.
    pub annealing: bool,
    /// Initial velocities are uniform in `+-fraction * side` per axis.
    pub initial_velocity_fraction: f64,
    /// Velocity components are clipped to `+-limit * side` per axis.
    pub velocity_limit: f64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            particles: 150,
            iterations: 150,
            inertia: 1.2,
            cognitive: 1.4,
            social: 1.4,
            penalty: 50.0,
            initial_temperature: 1.0,
            annealing: true,
            initial_velocity_fraction: 0.1,
            velocity_limit: 1.0,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 || self.iterations == 0 {
            return Err(Error::InvalidParameter("swarm needs at least one particle and one iteration".into()));
        }
        let positive = [self.inertia, self.cognitive, self.social, self.initial_temperature, self.velocity_limit];
        if positive.iter().any(|v| !(*v > 0.0)) || !(self.penalty >= 0.0) || !(self.initial_velocity_fraction >= 0.0) {
            return Err(Error::InvalidParameter("swarm constants must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<Position3>,
    pub velocity: Vec<[f64; 3]>,
    pub fitness: f64,
    pub best_position: Vec<Position3>,
    pub best_fitness: f64,
}

/// Number of antenna pairs closer than `d_min`.
pub fn violation_set_size(positions: &[Position3], d_min: f64) -> usize {
    let mut n = 0;
    for (i, a) in positions.iter().enumerate() {
        for b in &positions[i + 1..] {
            if a.distance(b) < d_min {
                n += 1;
            }
        }
    }
    n
}

/// Rate-like score of a configuration and the number of constraints it violates
/// besides antenna spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub violations: usize,
}

/// `value - penalty * (spacing violations + other violations)`.
pub fn fitness(eval: Evaluation, positions: &[Position3], d_min: f64, penalty: f64) -> f64 {
    eval.value - penalty * (violation_set_size(positions, d_min) + eval.violations) as f64
}

/// Velocity and position update with scalar random factors `r2` and `r3`, followed by
/// clipping of the velocity and clamping of the position onto the region.
#[allow(clippy::too_many_arguments)]
pub fn update_velocity_position(
    particle: &mut Particle,
    global_best: &[Position3],
    config: &SwarmConfig,
    region: &MovementRegion,
    r2: f64,
    r3: f64,
) {
    let ext = region.extent();
    for k in 0..particle.position.len() {
        let p = particle.position[k].to_array();
        let own = particle.best_position[k].to_array();
        let glob = global_best[k].to_array();
        let mut next = [0.0; 3];
        for a in 0..3 {
            let lim = config.velocity_limit * ext[a];
            let v = config.inertia * particle.velocity[k][a] + config.cognitive * r2 * (own[a] - p[a]) + config.social * r3 * (glob[a] - p[a]);
            let v = if ext[a] > 0.0 { v.clamp(-lim, lim) } else { 0.0 };
            particle.velocity[k][a] = v;
            next[a] = p[a] + v;
        }
        particle.position[k] = region.clamp(Position3::from_array(next));
    }
}

/// `T * (Q - q) / Q`.
pub fn temperature_step(t: f64, q: usize, total: usize) -> f64 {
    t * (total.saturating_sub(q)) as f64 / total as f64
}

/// Metropolis acceptance probability of moving from `incumbent` to `candidate`.
pub fn acceptance_probability(incumbent: f64, candidate: f64, t: f64) -> f64 {
    if candidate >= incumbent {
        1.0
    } else if t > 0.0 {
        ((candidate - incumbent) / t).exp()
    } else {
        0.0
    }
}

pub fn sa_accept<R: Rng + ?Sized>(incumbent: f64, candidate: f64, t: f64, rng: &mut R) -> bool {
    if candidate >= incumbent {
        return true;
    }
    rng.random::<f64>() < acceptance_probability(incumbent, candidate, t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmOutcome {
    /// Best configuration ever evaluated.
    pub positions: Vec<Position3>,
    pub fitness: f64,
    /// Best-ever fitness after initialization and after every iteration.
    pub trace: Vec<f64>,
    /// Worse global bests accepted by the annealing rule.
    pub accepted_worse: usize,
    /// Penalty in force for the returned search.
    pub penalty: f64,
}

fn uniform_in(region: &MovementRegion, rng: &mut ChaCha8Rng) -> Position3 {
    let lo = region.lower();
    let hi = region.upper();
    let mut c = [0.0; 3];
    for a in 0..3 {
        c[a] = if hi[a] > lo[a] { rng.random_range(lo[a]..=hi[a]) } else { lo[a] };
    }
    Position3::from_array(c)
}

fn search<F>(evaluate: &F, initial: &[Position3], region: &MovementRegion, d_min: f64, config: &SwarmConfig, seed: u64) -> SwarmOutcome
where
    F: Fn(&[Position3]) -> Evaluation,
{
    let score = |p: &[Position3]| fitness(evaluate(p), p, d_min, config.penalty);
    let ext = region.extent();
    let mut main = ChaCha8Rng::seed_from_u64(seed);
    let mut streams: Vec<ChaCha8Rng> = (0..config.particles)
        .map(|s| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(s as u64 + 1);
            r
        })
        .collect();
    let mut particles: Vec<Particle> = streams
        .iter_mut()
        .enumerate()
        .map(|(s, rng)| {
            let position: Vec<Position3> = if s == 0 {
                initial.iter().map(|p| region.clamp(*p)).collect()
            } else {
                initial.iter().map(|_| uniform_in(region, rng)).collect()
            };
            let velocity = initial
                .iter()
                .map(|_| {
                    let mut v = [0.0; 3];
                    for a in 0..3 {
                        let h = config.initial_velocity_fraction * ext[a];
                        v[a] = if h > 0.0 { rng.random_range(-h..=h) } else { 0.0 };
                    }
                    v
                })
                .collect();
            let f = score(&position);
            Particle { best_position: position.clone(), position, velocity, fitness: f, best_fitness: f }
        })
        .collect();

    let lead = (0..particles.len()).fold(0, |b, s| if particles[s].fitness > particles[b].fitness { s } else { b });
    let mut global = particles[lead].position.clone();
    let mut global_f = particles[lead].fitness;
    let mut best = global.clone();
    let mut best_f = global_f;
    let mut trace = vec![best_f];
    let mut temperature = config.initial_temperature;
    let mut accepted_worse = 0;
    let mut order: Vec<usize> = (0..particles.len()).collect();

    for q in 0..config.iterations {
        for (particle, rng) in particles.iter_mut().zip(streams.iter_mut()) {
            let r2: f64 = rng.random();
            let r3: f64 = rng.random();
            update_velocity_position(particle, &global, config, region, r2, r3);
            particle.fitness = score(&particle.position);
            if particle.fitness > particle.best_fitness {
                particle.best_fitness = particle.fitness;
                particle.best_position = particle.position.clone();
            }
        }
        order.sort_by(|&a, &b| particles[b].fitness.total_cmp(&particles[a].fitness).then(a.cmp(&b)));
        let top = &particles[order[0]];
        if top.fitness > best_f {
            best_f = top.fitness;
            best = top.position.clone();
        }
        if top.fitness >= global_f {
            global = top.position.clone();
            global_f = top.fitness;
        } else if config.annealing && sa_accept(global_f, top.fitness, temperature, &mut main) {
            let half = order.len().div_ceil(2);
            let pick = order[main.random_range(0..half)];
            global = particles[pick].position.clone();
            global_f = particles[pick].fitness;
            accepted_worse += 1;
        }
        temperature = temperature_step(temperature, q, config.iterations);
        trace.push(best_f);
    }
    SwarmOutcome { positions: best, fitness: best_f, trace, accepted_worse, penalty: config.penalty }
}

/// Search antenna positions maximizing `evaluate` minus the violation penalty.
///
/// The first particle starts at `initial`; the returned configuration is the best ever
/// evaluated. If it still violates a constraint the search is repeated once with a
/// doubled penalty.
pub fn sa_pso<F>(
    evaluate: F,
    initial: &[Position3],
    region: &MovementRegion,
    d_min: f64,
    config: &SwarmConfig,
    seed: u64,
) -> Result<SwarmOutcome>
where
    F: Fn(&[Position3]) -> Evaluation,
{
    config.validate()?;
    let violates = |o: &SwarmOutcome| violation_set_size(&o.positions, d_min) + evaluate(&o.positions).violations > 0;
    let first = search(&evaluate, initial, region, d_min, config, seed);
    if !violates(&first) {
        return Ok(first);
    }
    let doubled = SwarmConfig { penalty: 2.0 * config.penalty.max(1.0), ..*config };
    let second = search(&evaluate, initial, region, d_min, &doubled, seed);
    if violates(&second) {
        return Err(Error::SpacingInfeasible);
    }
    Ok(second)
}
