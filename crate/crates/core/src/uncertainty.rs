//! Bounded CSI error balls and closed-form worst cases of the scalar amplitudes.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::ChannelSet;
use crate::linalg::{CMat, CVec};
use crate::{Error, Result};
use alloc::format;

/// Radii of the cascaded (Frobenius) and direct (Euclidean) error balls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyModel {
    pub g_bs: f64,
    pub g_u: f64,
    pub xi_bs: f64,
    pub xi_u: f64,
}

impl UncertaintyModel {
    /// Radii proportional to the current channel norms.
    pub fn from_ratios(g_bs: f64, g_u: f64, channels: &ChannelSet) -> Result<Self> {
        for (name, g) in [("g_bs", g_bs), ("g_u", g_u)] {
            if !(0.0..1.0).contains(&g) {
                return Err(Error::InvalidParameter(format!("{name} = {g} outside [0, 1)")));
            }
        }
        Ok(Self {
            g_bs,
            g_u,
            xi_bs: g_bs * channels.h_bs.norm(),
            xi_u: g_u * channels.h_u.norm(),
        })
    }

    /// Recompute the radii after channels were rebuilt.
    pub fn rederive(&self, channels: &ChannelSet) -> Self {
        Self {
            xi_bs: self.g_bs * channels.h_bs.norm(),
            xi_u: self.g_u * channels.h_u.norm(),
            ..*self
        }
    }

    /// Explicit radii with no associated ratios.
    pub fn with_radii(xi_bs: f64, xi_u: f64) -> Self {
        Self { g_bs: 0.0, g_u: 0.0, xi_bs, xi_u }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub d_h_bs: CMat,
    pub d_h_u: CVec,
}

impl Perturbation {
    pub fn zero(m: usize, k: usize) -> Self {
        Self { d_h_bs: CMat::zeros(m, k), d_h_u: CVec::zeros(k) }
    }

    /// Channels with the errors added to the estimates.
    pub fn apply(&self, channels: &ChannelSet) -> (CVec, CMat) {
        (&channels.h_u + &self.d_h_u, &channels.h_bs + &self.d_h_bs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Fill `out` with a point of the radius-`xi` ball in `C^n` (as `R^{2n}`): on the sphere
/// with probability `boundary_fraction`, uniform in the ball otherwise.
fn sample_ball<R: Rng + ?Sized>(out: &mut [Complex64], xi: f64, boundary_fraction: f64, rng: &mut R) {
    if out.is_empty() || xi == 0.0 {
        out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        return;
    }
    let mut norm2 = 0.0;
    for z in out.iter_mut() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *z = Complex64::new(re, im);
        norm2 += re * re + im * im;
    }
    let on_boundary = rng.random::<f64>() < boundary_fraction;
    let radius = if on_boundary {
        xi
    } else {
        xi * rng.random::<f64>().powf(1.0 / (2 * out.len()) as f64)
    };
    let scale = radius / norm2.sqrt();
    out.iter_mut().for_each(|z| *z *= scale);
}

/// Draw both errors independently, each on its sphere with probability `boundary_fraction`.
pub fn sample_perturbation<R: Rng + ?Sized>(
    model: &UncertaintyModel,
    m: usize,
    k: usize,
    boundary_fraction: f64,
    rng: &mut R,
) -> Perturbation {
    let mut p = Perturbation::zero(m, k);
    sample_ball(p.d_h_bs.as_mut_slice(), model.xi_bs, boundary_fraction, rng);
    sample_ball(p.d_h_u.as_mut_slice(), model.xi_u, boundary_fraction, rng);
    p
}

/// `psi^H H w`.
pub fn cascaded_amplitude(h_bs: &CMat, psi: &CVec, w: &CVec) -> Complex64 {
    psi.dotc(&(h_bs * w))
}

/// Extremum of `|h_u^H w|` over `||dh_u|| <= xi_u`.
pub fn worst_case_direct_amplitude(h_u: &CVec, w: &CVec, xi_u: f64, sense: Sense) -> f64 {
    let nominal = h_u.dotc(w).norm();
    let slack = xi_u * w.norm();
    match sense {
        Sense::Min => (nominal - slack).max(0.0),
        Sense::Max => nominal + slack,
    }
}

/// Extremum of `|psi^H H_bs w|` over `||dH_bs||_F <= xi_bs`.
pub fn worst_case_cascaded_amplitude(h_bs: &CMat, psi: &CVec, w: &CVec, xi_bs: f64, sense: Sense) -> f64 {
    let nominal = cascaded_amplitude(h_bs, psi, w).norm();
    let slack = xi_bs * psi.norm() * w.norm();
    match sense {
        Sense::Min => (nominal - slack).max(0.0),
        Sense::Max => nominal + slack,
    }
}

/// Minimum of `|(h_u^H +- psi^H H_bs) w|` over both balls.
pub fn worst_case_combined_amplitude(
    h_u: &CVec,
    h_bs: &CMat,
    psi: &CVec,
    w: &CVec,
    xi_u: f64,
    xi_bs: f64,
    sign: Sign,
) -> f64 {
    let nominal = (h_u.dotc(w) + cascaded_amplitude(h_bs, psi, w) * sign.factor()).norm();
    (nominal - xi_u * w.norm() - xi_bs * psi.norm() * w.norm()).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_radius_gives_zero_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = sample_perturbation(&UncertaintyModel::with_radii(0.0, 0.0), 3, 2, 0.5, &mut rng);
        assert_eq!(p, Perturbation::zero(3, 2));
    }

    #[test]
    fn boundary_samples_sit_on_the_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = UncertaintyModel::with_radii(0.7, 0.2);
        for _ in 0..100 {
            let p = sample_perturbation(&model, 4, 3, 1.0, &mut rng);
            assert!((p.d_h_bs.norm() - 0.7).abs() < 1e-9);
            assert!((p.d_h_u.norm() - 0.2).abs() < 1e-9);
        }
    }

    #[test]
    fn scalar_pure_perturbation() {
        let h = CMat::zeros(1, 1);
        let psi = CVec::from_element(1, Complex64::new(0.0, 1.0));
        let w = CVec::from_element(1, Complex64::new(2.0, 0.0));
        let v = worst_case_cascaded_amplitude(&h, &psi, &w, 0.3, Sense::Max);
        assert!((v - 0.6).abs() < 1e-15);
    }
}
