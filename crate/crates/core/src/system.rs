//! System parameters and the objects derived from them.

use alloc::vec;
use alloc::vec::Vec;

use crate::beamforming::ScaOptions;
use crate::geometry::{MovementRegion, Position3, SceneLayout};
use crate::linalg::{db_to_linear, dbm_to_watts};
use crate::rates::{Scenario, ScenarioParams};
use crate::swarm::SwarmConfig;
use crate::uncertainty::UncertaintyModel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub scenario: Scenario,
    /// Movable antennas `K`.
    pub antennas: usize,
    /// RIS elements `M`.
    pub ris_elements: usize,
    /// Discrete phase levels per element.
    pub phase_levels: usize,
    /// Propagation paths per link.
    pub paths: usize,
    pub wavelength: f64,
    /// Side of the square movement region, in wavelengths.
    pub region_side: f64,
    /// Minimum antenna spacing, in wavelengths.
    pub min_spacing: f64,
    /// Path-loss gain at 1 m, dB.
    pub pathloss_gain_db: f64,
    pub pathloss_exponent: f64,
    pub transmitter: [f64; 3],
    pub ris: [f64; 3],
    pub users: Vec<[f64; 3]>,
    pub power_dbm: f64,
    pub noise_power: f64,
    pub gamma_p_min_db: f64,
    pub gamma_c_min_db: f64,
    /// Primary symbols per commensal secondary symbol.
    pub symbol_span: f64,
    pub g_bs: f64,
    pub g_u: f64,
    /// Relative objective change that stops the alternating optimization.
    pub ao_tolerance: f64,
    pub ao_max_iters: usize,
    pub sca: ScaOptions,
    pub swarm: SwarmConfig,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Psr,
            antennas: 4,
            ris_elements: 8,
            phase_levels: 8,
            paths: 9,
            wavelength: 0.1,
            region_side: 3.0,
            min_spacing: 0.5,
            pathloss_gain_db: -10.0,
            pathloss_exponent: 1.3,
            transmitter: [3.0, 0.0, 0.0],
            ris: [0.0, 30.0, 40.0],
            users: vec![[0.0, 60.0, 0.0]],
            power_dbm: 38.0,
            noise_power: 1e-12,
            gamma_p_min_db: 10.0,
            gamma_c_min_db: 10.0,
            symbol_span: 50.0,
            g_bs: 0.05,
            g_u: 0.1,
            ao_tolerance: 1e-2,
            ao_max_iters: 25,
            sca: ScaOptions::default(),
            swarm: SwarmConfig::default(),
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.into()));
        if self.antennas == 0 || self.phase_levels == 0 || self.paths == 0 {
            return bad("antenna, phase-level and path counts must be positive");
        }
        if self.users.is_empty() {
            return bad("at least one primary user is required");
        }
        let positive = [self.wavelength, self.region_side, self.noise_power, self.ao_tolerance];
        if positive.iter().any(|v| !(*v > 0.0)) || !(self.min_spacing >= 0.0) || !self.power_dbm.is_finite() {
            return bad("physical quantities must be positive");
        }
        if self.ao_max_iters == 0 {
            return bad("ao_max_iters must be positive");
        }
        if !(0.0..1.0).contains(&self.g_bs) || !(0.0..1.0).contains(&self.g_u) {
            return bad("uncertainty ratios must lie in [0, 1)");
        }
        self.scenario_params().validate()?;
        self.swarm.validate()?;
        self.region()?;
        Ok(())
    }

    pub fn power_watts(&self) -> f64 {
        dbm_to_watts(self.power_dbm)
    }

    pub fn min_spacing_m(&self) -> f64 {
        self.min_spacing * self.wavelength
    }

    pub fn region(&self) -> Result<MovementRegion> {
        MovementRegion::square(self.region_side * self.wavelength)
    }

    pub fn scenario_params(&self) -> ScenarioParams {
        ScenarioParams {
            scenario: self.scenario,
            noise_power: self.noise_power,
            gamma_p_min: db_to_linear(self.gamma_p_min_db),
            gamma_c_min: db_to_linear(self.gamma_c_min_db),
            symbol_span: self.symbol_span,
        }
    }

    pub fn layout(&self) -> SceneLayout {
        SceneLayout {
            wavelength: self.wavelength,
            transmitter: Position3::from_array(self.transmitter),
            ris: Position3::from_array(self.ris),
            users: self.users.iter().map(|p| Position3::from_array(*p)).collect(),
            ris_elements: self.ris_elements,
            paths: self.paths,
            pathloss_gain: db_to_linear(self.pathloss_gain_db),
            pathloss_exponent: self.pathloss_exponent,
        }
    }

    /// Ratios only; radii follow each channel realization.
    pub fn uncertainty_template(&self) -> UncertaintyModel {
        UncertaintyModel { g_bs: self.g_bs, g_u: self.g_u, xi_bs: 0.0, xi_u: 0.0 }
    }

    /// Deterministic starting placement shared by every scheme.
    pub fn initial_positions(&self) -> Result<Vec<Position3>> {
        self.region()?.grid_placement(self.antennas, self.min_spacing_m())
    }
}
