//! TOML run configuration.

use std::path::Path;

use masr_core::ao::Scheme;
use masr_core::beamforming::ScaOptions;
use masr_core::conic::Tolerances;
use masr_core::rates::Scenario;
use masr_core::swarm::SwarmConfig;
use masr_core::system::SystemConfig;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Location of the second primary user added by the `primary_users` sweep.
pub const SECOND_USER: [f64; 3] = [0.0, 80.0, 0.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwarmSection {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub penalty: f64,
    pub initial_temperature: f64,
    pub initial_velocity_fraction: f64,
    pub velocity_limit: f64,
}

impl Default for SwarmSection {
    fn default() -> Self {
        let s = SwarmConfig::default();
        Self {
            particles: s.particles,
            iterations: s.iterations,
            inertia: s.inertia,
            cognitive: s.cognitive,
            social: s.social,
            penalty: s.penalty,
            initial_temperature: s.initial_temperature,
            initial_velocity_fraction: s.initial_velocity_fraction,
            velocity_limit: s.velocity_limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaSection {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub penalty: f64,
    pub polish: bool,
    pub solver_gap: f64,
    pub solver_max_newton: usize,
}

impl Default for ScaSection {
    fn default() -> Self {
        let s = ScaOptions::default();
        Self {
            max_iters: s.max_iters,
            rel_tol: s.rel_tol,
            penalty: s.penalty,
            polish: s.polish,
            solver_gap: s.tolerances.gap,
            solver_max_newton: s.tolerances.max_newton,
        }
    }
}

/// Physical and algorithmic parameters; defaults reproduce the reference setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub scenario: String,
    pub antennas: usize,
    pub ris_elements: usize,
    pub phase_levels: usize,
    pub paths: usize,
    pub wavelength: f64,
    pub region_side: f64,
    pub min_spacing: f64,
    pub pathloss_gain_db: f64,
    pub pathloss_exponent: f64,
    pub transmitter: [f64; 3],
    pub ris: [f64; 3],
    pub users: Vec<[f64; 3]>,
    pub power_dbm: f64,
    pub noise_power: f64,
    pub gamma_p_min_db: f64,
    pub gamma_c_min_db: f64,
    pub symbol_span: f64,
    pub g_bs: f64,
    pub g_u: f64,
    pub ao_tolerance: f64,
    pub ao_max_iters: usize,
    pub swarm: SwarmSection,
    pub sca: ScaSection,
}

impl Default for SystemSection {
    fn default() -> Self {
        let c = SystemConfig::default();
        Self {
            scenario: c.scenario.name().into(),
            antennas: c.antennas,
            ris_elements: c.ris_elements,
            phase_levels: c.phase_levels,
            paths: c.paths,
            wavelength: c.wavelength,
            region_side: c.region_side,
            min_spacing: c.min_spacing,
            pathloss_gain_db: c.pathloss_gain_db,
            pathloss_exponent: c.pathloss_exponent,
            transmitter: c.transmitter,
            ris: c.ris,
            users: c.users,
            power_dbm: c.power_dbm,
            noise_power: c.noise_power,
            gamma_p_min_db: c.gamma_p_min_db,
            gamma_c_min_db: c.gamma_c_min_db,
            symbol_span: c.symbol_span,
            g_bs: c.g_bs,
            g_u: c.g_u,
            ao_tolerance: c.ao_tolerance,
            ao_max_iters: c.ao_max_iters,
            swarm: SwarmSection::default(),
            sca: ScaSection::default(),
        }
    }
}

impl SystemSection {
    pub fn to_system(&self) -> Result<SystemConfig> {
        let scenario: Scenario = self.scenario.parse()?;
        let s = &self.swarm;
        let sca = &self.sca;
        let config = SystemConfig {
            scenario,
            antennas: self.antennas,
            ris_elements: self.ris_elements,
            phase_levels: self.phase_levels,
            paths: self.paths,
            wavelength: self.wavelength,
            region_side: self.region_side,
            min_spacing: self.min_spacing,
            pathloss_gain_db: self.pathloss_gain_db,
            pathloss_exponent: self.pathloss_exponent,
            transmitter: self.transmitter,
            ris: self.ris,
            users: self.users.clone(),
            power_dbm: self.power_dbm,
            noise_power: self.noise_power,
            gamma_p_min_db: self.gamma_p_min_db,
            gamma_c_min_db: self.gamma_c_min_db,
            symbol_span: self.symbol_span,
            g_bs: self.g_bs,
            g_u: self.g_u,
            ao_tolerance: self.ao_tolerance,
            ao_max_iters: self.ao_max_iters,
            sca: ScaOptions {
                max_iters: sca.max_iters,
                rel_tol: sca.rel_tol,
                penalty: sca.penalty,
                polish: sca.polish,
                tolerances: Tolerances { gap: sca.solver_gap, max_newton: sca.solver_max_newton, ..Tolerances::default() },
            },
            swarm: SwarmConfig {
                particles: s.particles,
                iterations: s.iterations,
                inertia: s.inertia,
                cognitive: s.cognitive,
                social: s.social,
                penalty: s.penalty,
                initial_temperature: s.initial_temperature,
                annealing: true,
                initial_velocity_fraction: s.initial_velocity_fraction,
                velocity_limit: s.velocity_limit,
            },
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seeds: Vec<u64>,
    pub schemes: Vec<String>,
    /// Concurrent runs; 0 uses every available core.
    pub workers: usize,
    /// Perturbations drawn per run by the robustness check; 0 disables it.
    pub verify_samples: usize,
    pub output: String,
    /// Retry an infeasible run once with both SNR thresholds halved.
    pub gamma_halving_retry: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seeds: (0..10).collect(),
            schemes: vec![Scheme::ProposedSapso.name().into()],
            workers: 0,
            verify_samples: 1000,
            output: "results".into(),
            gamma_halving_retry: false,
        }
    }
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    PowerDbm,
    GU,
    GBs,
    Antennas,
    RisElements,
    /// 1 keeps the first primary user; 2 adds one at [`SECOND_USER`].
    PrimaryUsers,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::PowerDbm => "power_dbm",
            SweepAxis::GU => "g_u",
            SweepAxis::GBs => "g_bs",
            SweepAxis::Antennas => "antennas",
            SweepAxis::RisElements => "ris_elements",
            SweepAxis::PrimaryUsers => "primary_users",
        }
    }

    /// `base` with this parameter set to `value`.
    pub fn apply(self, base: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let count = || -> Result<usize> {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::Config(format!("{} needs a positive integer, got {value}", self.name())))
            }
        };
        let mut c = base.clone();
        match self {
            SweepAxis::PowerDbm => c.power_dbm = value,
            SweepAxis::GU => c.g_u = value,
            SweepAxis::GBs => c.g_bs = value,
            SweepAxis::Antennas => c.antennas = count()?,
            SweepAxis::RisElements => c.ris_elements = count()?,
            SweepAxis::PrimaryUsers => match count()? {
                1 => c.users.truncate(1),
                2 => {
                    c.users.truncate(1);
                    c.users.push(SECOND_USER);
                }
                n => return Err(Error::Config(format!("primary_users supports 1 or 2, got {n}"))),
            },
        }
        c.validate()?;
        Ok(c)
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            SweepAxis::PowerDbm,
            SweepAxis::GU,
            SweepAxis::GBs,
            SweepAxis::Antennas,
            SweepAxis::RisElements,
            SweepAxis::PrimaryUsers,
        ]
        .into_iter()
        .find(|a| a.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown sweep axis '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSection,
    pub run: RunSection,
    pub sweep: Option<SweepSection>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.to_system()?;
        self.schemes()?;
        if self.run.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::Config("sweep has no values".into()));
            }
            let base = self.system.to_system()?;
            for v in &sweep.values {
                sweep.axis.apply(&base, *v)?;
            }
        }
        Ok(())
    }

    pub fn schemes(&self) -> Result<Vec<Scheme>> {
        if self.run.schemes.is_empty() {
            return Err(Error::Config("scheme list is empty".into()));
        }
        self.run.schemes.iter().map(|s| Ok(s.parse()?)).collect()
    }
}
