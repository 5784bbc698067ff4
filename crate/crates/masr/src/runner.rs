//! Jobs, their execution and the serializable record of each run.

use std::time::Instant;

use masr_core::ao::{run_seed, users_at, verify_robustness, RobustnessReport, RunResult, Scheme};
use masr_core::geometry::Position3;
use masr_core::linalg::CVec;
use masr_core::rates::{Design, PhaseVector};
use masr_core::system::SystemConfig;
use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SweepAxis};
use crate::{Error, Result};

/// Stream of the per-seed generator used by the robustness check.
pub const VERIFY_STREAM: u64 = 2;

/// One (sweep value, scheme, seed) combination.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub system: SystemConfig,
    pub scheme: Scheme,
    pub seed: u64,
    pub sweep: Option<(SweepAxis, f64)>,
}

impl Job {
    pub fn sweep_name(&self) -> &'static str {
        self.sweep.map_or("none", |(a, _)| a.name())
    }
}

/// Expand a configuration into jobs, ordered by sweep value, then scheme, then seed.
pub fn jobs(config: &RunConfig) -> Result<Vec<Job>> {
    let base = config.system.to_system()?;
    let schemes = config.schemes()?;
    let points: Vec<(SystemConfig, Option<(SweepAxis, f64)>)> = match &config.sweep {
        Some(s) => s.values.iter().map(|&v| Ok((s.axis.apply(&base, v)?, Some((s.axis, v))))).collect::<Result<_>>()?,
        None => vec![(base, None)],
    };
    let mut out = Vec::new();
    for (system, sweep) in points {
        for &scheme in &schemes {
            for &seed in &config.run.seeds {
                out.push(Job { system: system.clone(), scheme, seed, sweep });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRecord {
    /// Beamformer entries as `[re, im]`.
    pub w: Vec<[f64; 2]>,
    pub phase_indices: Vec<usize>,
    pub phase_levels: usize,
    pub positions: Vec<[f64; 3]>,
}

impl DesignRecord {
    pub fn from_design(d: &Design) -> Self {
        Self {
            w: d.w.iter().map(|c| [c.re, c.im]).collect(),
            phase_indices: d.phases.indices.clone(),
            phase_levels: d.phases.levels,
            positions: d.positions.iter().map(|p| p.to_array()).collect(),
        }
    }

    pub fn to_design(&self) -> Design {
        Design {
            w: CVec::from_iterator(self.w.len(), self.w.iter().map(|c| Complex64::new(c[0], c[1]))),
            phases: PhaseVector { indices: self.phase_indices.clone(), levels: self.phase_levels },
            positions: self.positions.iter().map(|p| Position3::from_array(*p)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub objective: f64,
    pub transmit: Vec<f64>,
    pub transmit_note: Option<String>,
    pub passive: Option<Vec<f64>>,
    pub passive_note: Option<String>,
    pub swarm_best: Option<Vec<f64>>,
    pub seconds: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRecord {
    pub samples: usize,
    pub min_sampled_rate: f64,
    pub reported_bound: f64,
    pub violations: usize,
    pub min_sampled_secondary_snr_db: f64,
    pub passed: bool,
}

impl From<&RobustnessReport> for RobustnessRecord {
    fn from(r: &RobustnessReport) -> Self {
        Self {
            samples: r.samples,
            min_sampled_rate: r.min_sampled_rate,
            reported_bound: r.reported_bound,
            violations: r.violations,
            min_sampled_secondary_snr_db: 10.0 * r.min_sampled_secondary_snr.log10(),
            passed: r.passed(),
        }
    }
}

/// Everything recorded about one job; serialized as its JSON trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub scheme: String,
    pub seed: u64,
    pub sweep_name: String,
    pub sweep_value: Option<f64>,
    /// Factor applied to both SNR thresholds (1 unless a halving retry succeeded).
    pub gamma_scale: f64,
    pub ao_iters: usize,
    pub converged: bool,
    /// Robust objective after initialization and after every AO iteration.
    pub trace: Vec<f64>,
    pub iterations: Vec<IterationRecord>,
    /// NaN for failed runs (written as JSON `null`).
    #[serde(deserialize_with = "nan_if_null")]
    pub rate_bpshz: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub secondary_snr_db: f64,
    pub design: Option<DesignRecord>,
    pub robustness: Option<RobustnessRecord>,
    pub error: Option<String>,
    pub runtime_s: f64,
}

fn nan_if_null<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl RunRecord {
    /// File stem of this run's trace, unique within one invocation.
    pub fn stem(&self) -> String {
        let sweep = match self.sweep_value {
            Some(v) => format!("{}-{v}", self.sweep_name),
            None => "base".into(),
        };
        format!("{}_{}_{}_seed{}", self.scenario, self.scheme, sweep, self.seed)
    }

    /// Completed, and (when checked) robust under sampling.
    pub fn feasible(&self) -> bool {
        self.error.is_none() && self.robustness.as_ref().is_none_or(|r| r.passed)
    }

    fn failed(job: &Job, gamma_scale: f64, error: String, runtime_s: f64) -> Self {
        Self {
            scenario: job.system.scenario.name().into(),
            scheme: job.scheme.name().into(),
            seed: job.seed,
            sweep_name: job.sweep_name().into(),
            sweep_value: job.sweep.map(|s| s.1),
            gamma_scale,
            ao_iters: 0,
            converged: false,
            trace: Vec::new(),
            iterations: Vec::new(),
            rate_bpshz: f64::NAN,
            secondary_snr_db: f64::NAN,
            design: None,
            robustness: None,
            error: Some(error),
            runtime_s,
        }
    }

    fn completed(job: &Job, gamma_scale: f64, r: &RunResult, robustness: Option<RobustnessRecord>, runtime_s: f64) -> Self {
        let iterations = r
            .iterations
            .iter()
            .map(|it| IterationRecord {
                objective: it.objective,
                transmit: it.transmit.objective.clone(),
                transmit_note: it.transmit.note.clone(),
                passive: it.passive.as_ref().map(|p| p.objective.clone()),
                passive_note: it.passive.as_ref().and_then(|p| p.note.clone()),
                swarm_best: it.swarm.clone(),
                seconds: [it.times.transmit, it.times.passive, it.times.swarm],
            })
            .collect();
        Self {
            scenario: r.scenario.name().into(),
            scheme: r.scheme.name().into(),
            seed: r.seed,
            sweep_name: job.sweep_name().into(),
            sweep_value: job.sweep.map(|s| s.1),
            gamma_scale,
            ao_iters: r.ao_iterations(),
            converged: r.converged,
            trace: r.trace.clone(),
            iterations,
            rate_bpshz: r.robust_rate,
            secondary_snr_db: r.secondary_snr_db(),
            design: Some(DesignRecord::from_design(&r.design)),
            robustness,
            error: None,
            runtime_s,
        }
    }
}

/// Halve both SNR thresholds (linear), i.e. lower them by about 3 dB.
fn halve_gammas(system: &SystemConfig) -> SystemConfig {
    let d = 10.0 * 2f64.log10();
    SystemConfig { gamma_p_min_db: system.gamma_p_min_db - d, gamma_c_min_db: system.gamma_c_min_db - d, ..system.clone() }
}

/// Sampled robustness check of a design against the channels of `seed`.
pub fn verify_design(system: &SystemConfig, seed: u64, design: &Design, samples: usize) -> Result<RobustnessReport> {
    let scene = masr_core::ao::scene_for_seed(system, seed)?;
    let users = users_at(system, &scene, &design.positions)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(VERIFY_STREAM);
    let psi = design.phases.to_complex();
    Ok(verify_robustness(&system.scenario_params(), &users, &design.w, &psi, samples, &mut rng))
}

/// Run one job. Failures are recorded, not returned.
pub fn execute(job: &Job, verify_samples: usize, gamma_halving_retry: bool) -> RunRecord {
    let start = Instant::now();
    let clock = move || start.elapsed().as_secs_f64();
    let attempt = |system: &SystemConfig| run_seed(system, job.scheme, job.seed, &clock).map(|(_, r)| r);
    let mut system = job.system.clone();
    let mut gamma_scale = 1.0;
    let mut outcome = attempt(&system);
    if gamma_halving_retry && matches!(outcome, Err(masr_core::Error::Infeasible { .. })) {
        system = halve_gammas(&system);
        gamma_scale = 0.5;
        outcome = attempt(&system);
    }
    match outcome {
        Ok(r) => {
            let robustness = if verify_samples > 0 {
                match verify_design(&system, job.seed, &r.design, verify_samples) {
                    Ok(rep) => Some(RobustnessRecord::from(&rep)),
                    Err(e) => return RunRecord::failed(job, gamma_scale, e.to_string(), clock()),
                }
            } else {
                None
            };
            RunRecord::completed(job, gamma_scale, &r, robustness, clock())
        }
        Err(e) => RunRecord::failed(job, gamma_scale, e.to_string(), clock()),
    }
}

/// Run every job on `workers` threads (0: all cores), returning records in job order.
pub fn execute_all(jobs: &[Job], workers: usize, verify_samples: usize, gamma_halving_retry: bool) -> Result<Vec<RunRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| jobs.par_iter().map(|j| execute(j, verify_samples, gamma_halving_retry)).collect()))
}

/// System a recorded run was solved for: the configured base with the record's sweep
/// point and threshold scaling applied.
pub fn system_for(config: &RunConfig, record: &RunRecord) -> Result<SystemConfig> {
    let mut system = config.system.to_system()?;
    system.scenario = record.scenario.parse()?;
    if let Some(v) = record.sweep_value {
        system = record.sweep_name.parse::<SweepAxis>()?.apply(&system, v)?;
    }
    if record.gamma_scale != 1.0 {
        system = halve_gammas(&system);
    }
    Ok(system)
}

/// Independent re-check of a stored design.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub recomputed_rate: f64,
    pub rate_matches: bool,
    pub power_ok: bool,
    pub spacing_ok: bool,
    pub in_region: bool,
    pub robustness: RobustnessRecord,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.rate_matches && self.power_ok && self.spacing_ok && self.in_region && self.robustness.passed
    }
}

pub fn verify_record(config: &RunConfig, record: &RunRecord, samples: usize) -> Result<Verification> {
    let design = record
        .design
        .as_ref()
        .ok_or_else(|| Error::Config(format!("{} has no design to verify", record.stem())))?
        .to_design();
    let system = system_for(config, record)?;
    let scene = masr_core::ao::scene_for_seed(&system, record.seed)?;
    let users = users_at(&system, &scene, &design.positions)?;
    let psi = design.phases.to_complex();
    let recomputed_rate = masr_core::rates::robust_objective(&system.scenario_params(), &users, &design.w, &psi);
    let region = system.region()?;
    let report = verify_design(&system, record.seed, &design, samples)?;
    Ok(Verification {
        recomputed_rate,
        rate_matches: (recomputed_rate - record.rate_bpshz).abs() <= 1e-6 * record.rate_bpshz.abs().max(1.0),
        power_ok: design.w.norm_squared() <= system.power_watts() * (1.0 + 1e-6),
        spacing_ok: masr_core::swarm::violation_set_size(&design.positions, system.min_spacing_m() * (1.0 - 1e-9)) == 0,
        in_region: design.positions.iter().all(|p| region.contains(p)),
        robustness: RobustnessRecord::from(&report),
    })
}
