//! Alternating optimization of beamformer, RIS phases and antenna positions.

use alloc::vec::Vec;
use alloc::{format, vec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::beamforming::{aligned_phases, initial_beamformer, sca_passive, sca_transmit, ScaTrace};
use crate::geometry::{ChannelSynthesizer, Position3, Scene};
use crate::linalg::{linear_to_db, CVec};
use crate::rates::{
    rate, robust_objective, robust_secondary_snr_min, secondary_qos_met, secondary_snr, Design, PhaseVector, Scenario,
    ScenarioParams, UserState,
};
use crate::swarm::{sa_pso, Evaluation, SwarmConfig};
use crate::system::SystemConfig;
use crate::uncertainty::sample_perturbation;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Beamforming, phases and positions with the annealed swarm.
    ProposedSapso,
    /// As above with a plain particle swarm.
    ProposedPso,
    /// Fixed antenna positions.
    Fpa,
    /// Random grid phases drawn once, no phase optimization.
    RandomPsi,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::ProposedSapso, Scheme::ProposedPso, Scheme::Fpa, Scheme::RandomPsi];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::ProposedSapso => "proposed-sapso",
            Scheme::ProposedPso => "proposed-pso",
            Scheme::Fpa => "fpa",
            Scheme::RandomPsi => "random-psi",
        }
    }

    fn moves_antennas(self) -> bool {
        !matches!(self, Scheme::Fpa)
    }

    fn optimizes_phases(self) -> bool {
        !matches!(self, Scheme::RandomPsi)
    }
}

impl core::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scheme '{s}'")))
    }
}

/// Wall-clock seconds spent per stage.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageTimes {
    pub transmit: f64,
    pub passive: f64,
    pub swarm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoIteration {
    /// Robust objective at the end of the iteration.
    pub objective: f64,
    pub transmit: ScaTrace,
    pub passive: Option<ScaTrace>,
    /// Best-ever fitness of the position search.
    pub swarm: Option<Vec<f64>>,
    pub times: StageTimes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub scenario: Scenario,
    pub scheme: Scheme,
    pub seed: u64,
    /// Robust objective of the initial point followed by one entry per iteration.
    pub trace: Vec<f64>,
    pub iterations: Vec<AoIteration>,
    pub converged: bool,
    pub design: Design,
    /// Worst-case primary rate (minimum over users), bps/Hz.
    pub robust_rate: f64,
    /// Worst-case secondary SNR (minimum over users), linear.
    pub robust_secondary_snr: f64,
    pub times: StageTimes,
}

impl RunResult {
    pub fn ao_iterations(&self) -> usize {
        self.iterations.len()
    }

    pub fn secondary_snr_db(&self) -> f64 {
        linear_to_db(self.robust_secondary_snr)
    }

    pub fn is_monotone(&self, slack: f64) -> bool {
        self.trace.windows(2).all(|p| p[1] >= p[0] - slack)
    }
}

/// Everything the alternating optimization needs besides the channel draw.
struct Problem<'a> {
    config: &'a SystemConfig,
    params: ScenarioParams,
    synth: ChannelSynthesizer,
}

impl Problem<'_> {
    fn users(&self, positions: &[Position3]) -> Vec<UserState> {
        let template = self.config.uncertainty_template();
        self.synth.synthesize(positions).into_iter().map(|ch| UserState::new(ch, &template)).collect()
    }
}

fn random_phases(m: usize, levels: usize, rng: &mut ChaCha8Rng) -> PhaseVector {
    PhaseVector { indices: (0..m).map(|_| rng.random_range(0..levels)).collect(), levels }
}

fn stage_error(e: Error, iteration: usize) -> Error {
    match e {
        Error::Infeasible { stage, constraints } => {
            Error::Infeasible { stage: format!("{stage} (iteration {iteration})"), constraints }
        }
        Error::NumericalFailure { stage, reason } => {
            Error::NumericalFailure { stage: format!("{stage} (iteration {iteration})"), reason }
        }
        other => other,
    }
}

/// Stream of the per-seed generator that draws the scene; the optimization uses
/// [`AO_STREAM`] of the same seed.
pub const SCENE_STREAM: u64 = 0;
pub const AO_STREAM: u64 = 1;

/// Scene (angles and path gains) of one seed.
pub fn scene_for_seed(config: &SystemConfig, seed: u64) -> Result<Scene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SCENE_STREAM);
    Scene::generate(&config.layout(), &mut rng)
}

/// Draw the scene of `seed` and optimize it with `scheme`.
pub fn run_seed(config: &SystemConfig, scheme: Scheme, seed: u64, clock: &dyn Fn() -> f64) -> Result<(Scene, RunResult)> {
    config.validate()?;
    let scene = scene_for_seed(config, seed)?;
    let result = alternating_optimize(config, &scene, scheme, seed, clock)?;
    Ok((scene, result))
}

/// Alternate transmit SCA, passive SCA and the position search until the relative
/// change of the robust objective drops below the tolerance.
///
/// `clock` returns seconds from an arbitrary origin and is only used for timing.
pub fn alternating_optimize(
    config: &SystemConfig,
    scene: &Scene,
    scheme: Scheme,
    seed: u64,
    clock: &dyn Fn() -> f64,
) -> Result<RunResult> {
    config.validate()?;
    let problem = Problem { config, params: config.scenario_params(), synth: ChannelSynthesizer::new(scene)? };
    let params = &problem.params;
    let power = config.power_watts();
    let levels = config.phase_levels;
    let region = config.region()?;
    let d_min = config.min_spacing_m();
    let m = problem.synth.elements();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(AO_STREAM);

    let mut positions = config.initial_positions()?;
    let mut users = problem.users(&positions);
    let mut phases = match (scheme, params.scenario) {
        (Scheme::RandomPsi, _) | (_, Scenario::Psr) => random_phases(m, levels, &mut rng),
        (_, Scenario::Csr) => {
            let k = users[0].channels.h_u.len();
            let n = users[0].channels.h_u.norm();
            let mrt = if n > 0.0 { users[0].channels.h_u.scale(power.sqrt() / n) } else { CVec::zeros(k) };
            aligned_phases(&users[0], &mrt, levels)
        }
    };
    let mut psi = phases.to_complex();
    let mut w = initial_beamformer(params, &users, &psi, power).map_err(|e| stage_error(e, 0))?;
    let mut f = robust_objective(params, &users, &w, &psi);
    let mut trace = vec![f];
    let mut iterations = Vec::new();
    let mut times = StageTimes::default();
    let mut converged = false;

    for it in 1..=config.ao_max_iters {
        let mut t = StageTimes::default();
        let t0 = clock();
        let tx = sca_transmit(params, &users, &psi, &w, power, &config.sca).map_err(|e| stage_error(e, it))?;
        w = tx.w;
        let t1 = clock();
        t.transmit = t1 - t0;

        let passive = if scheme.optimizes_phases() {
            let out = sca_passive(params, &users, &w, &phases, power, &config.sca).map_err(|e| stage_error(e, it))?;
            phases = out.phases;
            psi = phases.to_complex();
            Some(out.trace)
        } else {
            None
        };
        let t2 = clock();
        t.passive = t2 - t1;

        let swarm = if scheme.moves_antennas() {
            let evaluate = |p: &[Position3]| {
                let us = problem.users(p);
                let ok = secondary_qos_met(params, &us, &w, &psi, 1e-9);
                Evaluation { value: robust_objective(params, &us, &w, &psi), violations: usize::from(!ok) }
            };
            let cfg = SwarmConfig { annealing: scheme == Scheme::ProposedSapso, ..config.swarm };
            let swarm_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(it as u64);
            let out = sa_pso(evaluate, &positions, &region, d_min, &cfg, swarm_seed).map_err(|e| stage_error(e, it))?;
            let incumbent = robust_objective(params, &users, &w, &psi);
            if out.fitness > incumbent {
                positions = out.positions;
                users = problem.users(&positions);
            }
            Some(out.trace)
        } else {
            None
        };
        t.swarm = clock() - t2;
        times.transmit += t.transmit;
        times.passive += t.passive;
        times.swarm += t.swarm;

        let f_new = robust_objective(params, &users, &w, &psi);
        trace.push(f_new);
        iterations.push(AoIteration { objective: f_new, transmit: tx.trace, passive, swarm, times: t });
        let change = (f_new - f).abs() / f.abs().max(1e-12);
        f = f_new;
        if change < config.ao_tolerance {
            converged = true;
            break;
        }
    }

    let robust_secondary_snr = robust_secondary_snr_min(params, &users, &w, &psi);
    Ok(RunResult {
        scenario: params.scenario,
        scheme,
        seed,
        trace,
        iterations,
        converged,
        design: Design { w, phases, positions },
        robust_rate: f,
        robust_secondary_snr,
        times,
    })
}

/// Sampled check of a design against its own robust guarantees.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub samples: usize,
    /// Smallest primary rate (minimum over users) seen over all samples.
    pub min_sampled_rate: f64,
    pub reported_bound: f64,
    /// Samples where some user's secondary SNR fell below its threshold.
    pub violations: usize,
    pub min_sampled_secondary_snr: f64,
}

impl RobustnessReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.min_sampled_rate >= self.reported_bound - 1e-6
    }
}

/// Draw `n` perturbations per user (half of them on the ball boundary) and compare the
/// perturbed rates and secondary SNRs with the robust guarantees.
pub fn verify_robustness<R: Rng + ?Sized>(
    params: &ScenarioParams,
    users: &[UserState],
    w: &CVec,
    psi: &CVec,
    n: usize,
    rng: &mut R,
) -> RobustnessReport {
    let need = params.secondary_threshold();
    let mut min_rate = f64::INFINITY;
    let mut min_snr = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..n {
        let mut sample_rate = f64::INFINITY;
        let mut bad = false;
        for u in users {
            let m = u.channels.h_bs.nrows();
            let k = u.channels.h_bs.ncols();
            let pert = sample_perturbation(&u.uncertainty, m, k, 0.5, rng);
            sample_rate = sample_rate.min(rate(params, &u.channels, w, psi, Some(&pert)));
            let snr = secondary_snr(params, &u.channels, w, psi, Some(&pert));
            min_snr = min_snr.min(snr);
            bad |= snr < need * (1.0 - 1e-9);
        }
        min_rate = min_rate.min(sample_rate);
        violations += usize::from(bad);
    }
    RobustnessReport {
        samples: n,
        min_sampled_rate: min_rate,
        reported_bound: robust_objective(params, users, w, psi),
        violations,
        min_sampled_secondary_snr: min_snr,
    }
}

/// Channels of every user at the design's positions, with radii rederived.
pub fn users_at(config: &SystemConfig, scene: &Scene, positions: &[Position3]) -> Result<Vec<UserState>> {
    let synth = ChannelSynthesizer::new(scene)?;
    let template = config.uncertainty_template();
    Ok(synth.synthesize(positions).into_iter().map(|ch| UserState::new(ch, &template)).collect())
}
