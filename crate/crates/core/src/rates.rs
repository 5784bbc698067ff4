//! Primary rate and secondary SNR expressions for both symbiotic-radio scenarios.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::geometry::{ChannelSet, Position3};
use crate::linalg::{cis, CMat, CVec};
use crate::uncertainty::{
    cascaded_amplitude, worst_case_cascaded_amplitude, worst_case_combined_amplitude,
    worst_case_direct_amplitude, Perturbation, Sense, Sign, UncertaintyModel,
};
use crate::{Error, Result};

/// Parasitic (secondary symbol as long as the primary one) or commensal (spans `L`
/// primary symbols).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Psr,
    Csr,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Psr => "psr",
            Scenario::Csr => "csr",
        }
    }
}

impl core::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "psr" => Ok(Scenario::Psr),
            "csr" => Ok(Scenario::Csr),
            other => Err(Error::InvalidParameter(alloc::format!("unknown scenario '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    pub scenario: Scenario,
    /// Noise power in watts.
    pub noise_power: f64,
    /// Linear SNR threshold for decoding the secondary signal (parasitic).
    pub gamma_p_min: f64,
    /// Linear SNR threshold for decoding the secondary signal (commensal).
    pub gamma_c_min: f64,
    /// Primary symbols spanned by one commensal secondary symbol.
    pub symbol_span: f64,
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_power > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("noise power {}", self.noise_power)));
        }
        if !(self.gamma_p_min >= 0.0 && self.gamma_c_min >= 0.0) {
            return Err(Error::InvalidParameter("negative SNR threshold".into()));
        }
        if !(self.symbol_span >= 1.0) {
            return Err(Error::InvalidParameter(alloc::format!("symbol span {}", self.symbol_span)));
        }
        Ok(())
    }

    /// Minimum `|psi^H H_bs w|^2` the secondary link needs.
    pub fn secondary_power_threshold(&self) -> f64 {
        match self.scenario {
            Scenario::Psr => self.gamma_p_min * self.noise_power,
            Scenario::Csr => self.gamma_c_min * self.noise_power / self.symbol_span,
        }
    }

    /// Linear SNR threshold of the active scenario.
    pub fn secondary_threshold(&self) -> f64 {
        match self.scenario {
            Scenario::Psr => self.gamma_p_min,
            Scenario::Csr => self.gamma_c_min,
        }
    }
}

/// `e^{j 2 pi i / levels}`.
pub fn grid_phase(index: usize, levels: usize) -> Complex64 {
    cis(2.0 * PI * index as f64 / levels as f64)
}

/// RIS phases as indices into the `levels`-point grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PhaseVector {
    pub indices: Vec<usize>,
    pub levels: usize,
}

impl PhaseVector {
    pub fn new(indices: Vec<usize>, levels: usize) -> Result<Self> {
        if levels == 0 || indices.iter().any(|&i| i >= levels) {
            return Err(Error::InvalidParameter(alloc::format!("phase indices outside a {levels}-level grid")));
        }
        Ok(Self { indices, levels })
    }

    pub fn zeros(m: usize, levels: usize) -> Self {
        Self { indices: alloc::vec![0; m], levels }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn to_complex(&self) -> CVec {
        CVec::from_iterator(self.indices.len(), self.indices.iter().map(|&i| grid_phase(i, self.levels)))
    }

    /// Nearest grid index for every entry of a (possibly off-grid) complex vector.
    pub fn project(psi: &CVec, levels: usize) -> Self {
        let step = 2.0 * PI / levels as f64;
        let indices = psi
            .iter()
            .map(|z| {
                let a = if z.arg() < 0.0 { z.arg() + 2.0 * PI } else { z.arg() };
                ((a / step).round() as usize) % levels
            })
            .collect();
        Self { indices, levels }
    }
}

/// Full design point.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub w: CVec,
    pub phases: PhaseVector,
    pub positions: Vec<Position3>,
}

fn effective<'a>(channels: &'a ChannelSet, pert: Option<&Perturbation>) -> (alloc::borrow::Cow<'a, CVec>, alloc::borrow::Cow<'a, CMat>) {
    use alloc::borrow::Cow;
    match pert {
        None => (Cow::Borrowed(&channels.h_u), Cow::Borrowed(&channels.h_bs)),
        Some(p) => {
            let (h_u, h_bs) = p.apply(channels);
            (Cow::Owned(h_u), Cow::Owned(h_bs))
        }
    }
}

/// `|h_u^H w|^2 / (|psi^H H_bs w|^2 + sigma^2)`.
pub fn psr_primary_sinr(channels: &ChannelSet, w: &CVec, psi: &CVec, noise: f64, pert: Option<&Perturbation>) -> f64 {
    let (h_u, h_bs) = effective(channels, pert);
    h_u.dotc(w).norm_sqr() / (cascaded_amplitude(&h_bs, psi, w).norm_sqr() + noise)
}

pub fn psr_rate(channels: &ChannelSet, w: &CVec, psi: &CVec, noise: f64, pert: Option<&Perturbation>) -> f64 {
    (1.0 + psr_primary_sinr(channels, w, psi, noise, pert)).log2()
}

/// Worst-case direct power over worst-case interference.
pub fn psr_robust_rate_lower_bound(channels: &ChannelSet, w: &CVec, psi: &CVec, noise: f64, unc: &UncertaintyModel) -> f64 {
    let s = worst_case_direct_amplitude(&channels.h_u, w, unc.xi_u, Sense::Min);
    let i = worst_case_cascaded_amplitude(&channels.h_bs, psi, w, unc.xi_bs, Sense::Max);
    (1.0 + s * s / (i * i + noise)).log2()
}

/// `|psi^H H_bs w|^2 / sigma^2` after successive interference cancellation.
pub fn psr_secondary_snr(channels: &ChannelSet, w: &CVec, psi: &CVec, noise: f64, pert: Option<&Perturbation>) -> f64 {
    let (_, h_bs) = effective(channels, pert);
    cascaded_amplitude(&h_bs, psi, w).norm_sqr() / noise
}

pub fn psr_robust_secondary_snr(channels: &ChannelSet, w: &CVec, psi: &CVec, noise: f64, unc: &UncertaintyModel) -> f64 {
    let a = worst_case_cascaded_amplitude(&channels.h_bs, psi, w, unc.xi_bs, Sense::Min);
    a * a / noise
}

/// Average over the two equiprobable secondary symbols.
pub fn csr_rate(channels: &ChannelSet, w: &CVec, psi: &CVec, noise: f64, pert: Option<&Perturbation>) -> f64 {
    let (h_u, h_bs) = effective(channels, pert);
    let d = h_u.dotc(w);
    let c = cascaded_amplitude(&h_bs, psi, w);
    0.5 * (1.0 + (d + c).norm_sqr() / noise).log2() + 0.5 * (1.0 + (d - c).norm_sqr() / noise).log2()
}

pub fn csr_robust_rate_lower_bound(channels: &ChannelSet, w: &CVec, psi: &CVec, noise: f64, unc: &UncertaintyModel) -> f64 {
    let amp = |sign| worst_case_combined_amplitude(&channels.h_u, &channels.h_bs, psi, w, unc.xi_u, unc.xi_bs, sign);
    let (p, m) = (amp(Sign::Plus), amp(Sign::Minus));
    0.5 * (1.0 + p * p / noise).log2() + 0.5 * (1.0 + m * m / noise).log2()
}

/// `L |psi^H H_bs w|^2 / sigma^2` after maximum-ratio combining over `L` symbols.
pub fn csr_secondary_snr(channels: &ChannelSet, w: &CVec, psi: &CVec, noise: f64, span: f64, pert: Option<&Perturbation>) -> f64 {
    span * psr_secondary_snr(channels, w, psi, noise, pert)
}

pub fn csr_robust_secondary_snr(channels: &ChannelSet, w: &CVec, psi: &CVec, noise: f64, span: f64, unc: &UncertaintyModel) -> f64 {
    span * psr_robust_secondary_snr(channels, w, psi, noise, unc)
}

/// Minimum over primary users.
pub fn multi_pu_objective(rates: &[f64]) -> f64 {
    rates.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Rate of the active scenario at an optional perturbation.
pub fn rate(params: &ScenarioParams, channels: &ChannelSet, w: &CVec, psi: &CVec, pert: Option<&Perturbation>) -> f64 {
    match params.scenario {
        Scenario::Psr => psr_rate(channels, w, psi, params.noise_power, pert),
        Scenario::Csr => csr_rate(channels, w, psi, params.noise_power, pert),
    }
}

/// Robust lower-bound rate of the active scenario.
pub fn robust_rate(params: &ScenarioParams, channels: &ChannelSet, w: &CVec, psi: &CVec, unc: &UncertaintyModel) -> f64 {
    match params.scenario {
        Scenario::Psr => psr_robust_rate_lower_bound(channels, w, psi, params.noise_power, unc),
        Scenario::Csr => csr_robust_rate_lower_bound(channels, w, psi, params.noise_power, unc),
    }
}

/// Secondary SNR of the active scenario at an optional perturbation.
pub fn secondary_snr(params: &ScenarioParams, channels: &ChannelSet, w: &CVec, psi: &CVec, pert: Option<&Perturbation>) -> f64 {
    match params.scenario {
        Scenario::Psr => psr_secondary_snr(channels, w, psi, params.noise_power, pert),
        Scenario::Csr => csr_secondary_snr(channels, w, psi, params.noise_power, params.symbol_span, pert),
    }
}

/// Worst-case secondary SNR of the active scenario.
pub fn robust_secondary_snr(params: &ScenarioParams, channels: &ChannelSet, w: &CVec, psi: &CVec, unc: &UncertaintyModel) -> f64 {
    match params.scenario {
        Scenario::Psr => psr_robust_secondary_snr(channels, w, psi, params.noise_power, unc),
        Scenario::Csr => csr_robust_secondary_snr(channels, w, psi, params.noise_power, params.symbol_span, unc),
    }
}

/// Estimated channels of one primary user and their error balls.
#[derive(Debug, Clone, PartialEq)]
pub struct UserState {
    pub channels: ChannelSet,
    pub uncertainty: UncertaintyModel,
}

impl UserState {
    /// Radii derived from the ratios of `template` and the norms of `channels`.
    pub fn new(channels: ChannelSet, template: &UncertaintyModel) -> Self {
        let uncertainty = template.rederive(&channels);
        Self { channels, uncertainty }
    }
}

/// Robust objective across users, each with its own error balls.
pub fn robust_objective(params: &ScenarioParams, users: &[UserState], w: &CVec, psi: &CVec) -> f64 {
    let rates: Vec<f64> = users.iter().map(|u| robust_rate(params, &u.channels, w, psi, &u.uncertainty)).collect();
    multi_pu_objective(&rates)
}

/// Smallest worst-case secondary SNR across users.
pub fn robust_secondary_snr_min(params: &ScenarioParams, users: &[UserState], w: &CVec, psi: &CVec) -> f64 {
    users
        .iter()
        .map(|u| robust_secondary_snr(params, &u.channels, w, psi, &u.uncertainty))
        .fold(f64::INFINITY, f64::min)
}

/// Worst-case secondary QoS satisfied for every user, with relative slack `tol`.
pub fn secondary_qos_met(params: &ScenarioParams, users: &[UserState], w: &CVec, psi: &CVec, tol: f64) -> bool {
    let need = params.secondary_threshold();
    robust_secondary_snr_min(params, users, w, psi) >= need * (1.0 - tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn projection_is_idempotent_on_grid() {
        let pv = PhaseVector::new(vec![0, 3, 7, 5], 8).unwrap();
        assert_eq!(PhaseVector::project(&pv.to_complex(), 8), pv);
    }

    #[test]
    fn grid_phase_values() {
        assert_eq!(grid_phase(0, 8), Complex64::new(1.0, 0.0));
        assert!((grid_phase(2, 8) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!(PhaseVector::new(vec![8], 8).is_err());
    }

    #[test]
    fn multi_pu_min() {
        assert_eq!(multi_pu_objective(&[2.0, 1.0]), 1.0);
        assert_eq!(multi_pu_objective(&[1.5]), 1.5);
    }
}
