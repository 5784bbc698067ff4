//! Far-field field-response channel model.
//!
//! Every link is described by per-path angles and complex path gains. Only the phases of
//! the PT-side responses depend on the antenna positions, so a [`ChannelSynthesizer`]
//! caches everything else and rebuilds channels cheaply for new positions.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::linalg::{cis, CMat, CVec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3 {
    pub const ORIGIN: Position3 = Position3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Position3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Axis-aligned box that antenna positions must stay inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovementRegion {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl MovementRegion {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        for i in 0..3 {
            if !(min[i].is_finite() && max[i].is_finite()) || min[i] > max[i] {
                return Err(Error::InvalidParameter(format!(
                    "region bounds [{}, {}] on axis {i}",
                    min[i], max[i]
                )));
            }
        }
        Ok(Self {
            x_min: min[0],
            x_max: max[0],
            y_min: min[1],
            y_max: max[1],
            z_min: min[2],
            z_max: max[2],
        })
    }

    /// Square `[-side/2, side/2]^2` in the local x-y plane with `z = 0`.
    pub fn square(side: f64) -> Result<Self> {
        Self::new([-side / 2.0, -side / 2.0, 0.0], [side / 2.0, side / 2.0, 0.0])
    }

    pub fn lower(&self) -> [f64; 3] {
        [self.x_min, self.y_min, self.z_min]
    }

    pub fn upper(&self) -> [f64; 3] {
        [self.x_max, self.y_max, self.z_max]
    }

    pub fn extent(&self) -> [f64; 3] {
        [self.x_max - self.x_min, self.y_max - self.y_min, self.z_max - self.z_min]
    }

    pub fn contains(&self, p: &Position3) -> bool {
        (self.x_min..=self.x_max).contains(&p.x)
            && (self.y_min..=self.y_max).contains(&p.y)
            && (self.z_min..=self.z_max).contains(&p.z)
    }

    /// Componentwise clamp onto the box.
    pub fn clamp(&self, p: Position3) -> Position3 {
        Position3::new(
            p.x.clamp(self.x_min, self.x_max),
            p.y.clamp(self.y_min, self.y_max),
            p.z.clamp(self.z_min, self.z_max),
        )
    }

    /// Deterministic placement of `k` antennas on a near-square grid, spaced as widely as
    /// the region allows. Fails when the spacing cannot reach `d_min`.
    pub fn grid_placement(&self, k: usize, d_min: f64) -> Result<Vec<Position3>> {
        if k == 0 {
            return Ok(Vec::new());
        }
        let cols = (k as f64).sqrt().ceil() as usize;
        let rows = k.div_ceil(cols);
        let axis = |lo: f64, hi: f64, n: usize, i: usize| {
            if n == 1 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        };
        let z = 0.5 * (self.z_min + self.z_max);
        let positions: Vec<Position3> = (0..k)
            .map(|i| {
                let (r, c) = (i / cols, i % cols);
                Position3::new(
                    axis(self.x_min, self.x_max, cols, c),
                    axis(self.y_min, self.y_max, rows, r),
                    z,
                )
            })
            .collect();
        if min_pairwise_distance(&positions) < d_min {
            return Err(Error::SpacingInfeasible);
        }
        Ok(positions)
    }
}

pub fn min_pairwise_distance(positions: &[Position3]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in positions.iter().enumerate() {
        for b in &positions[i + 1..] {
            best = best.min(a.distance(b));
        }
    }
    best
}

/// Per-path angles of one link, radians in `[0, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathAngles {
    pub transmit_azimuth: Vec<f64>,
    pub transmit_elevation: Vec<f64>,
    pub receive_azimuth: Vec<f64>,
    pub receive_elevation: Vec<f64>,
}

impl PathAngles {
    pub fn paths(&self) -> usize {
        self.transmit_azimuth.len()
    }

    fn check(&self, label: &str) -> Result<usize> {
        let l = self.transmit_azimuth.len();
        if self.transmit_elevation.len() != l
            || self.receive_azimuth.len() != l
            || self.receive_elevation.len() != l
        {
            return Err(Error::Dimension(format!("{label}: angle lists have unequal lengths")));
        }
        Ok(l)
    }
}

/// Diagonal path-response matrix of one link.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResponse {
    pub gains: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub angles: PathAngles,
    pub response: PathResponse,
}

impl Link {
    fn check(&self, label: &str) -> Result<usize> {
        let l = self.angles.check(label)?;
        if self.response.gains.len() != l {
            return Err(Error::Dimension(format!(
                "{label}: {} path gains for {l} paths",
                self.response.gains.len()
            )));
        }
        Ok(l)
    }
}

/// Propagation difference of `p` relative to the local origin for one path.
pub fn propagation_difference(p: &Position3, elevation: f64, azimuth: f64) -> f64 {
    let (se, ce) = elevation.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    p.x * ce * ca + p.y * ce * sa + p.z * se
}

/// Field-response vector `[e^{j 2pi/lambda rho_l(p)}]_l`.
pub fn field_response_vector(p: &Position3, elevations: &[f64], azimuths: &[f64], wavelength: f64) -> CVec {
    let k = 2.0 * PI / wavelength;
    CVec::from_iterator(
        elevations.len(),
        elevations
            .iter()
            .zip(azimuths)
            .map(|(&el, &az)| cis(k * propagation_difference(p, el, az))),
    )
}

/// Per-path gain variance `v Upsilon^-nu / L`.
pub fn pathloss_variance(distance: f64, gain: f64, exponent: f64, paths: usize) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::InvalidParameter(format!("link distance {distance}")));
    }
    if paths == 0 {
        return Err(Error::InvalidParameter("zero path count".into()));
    }
    Ok(gain * distance.powf(-exponent) / paths as f64)
}

/// Channels seen by one primary user.
///
/// `h_r_herm` is `H_r^H` (M x K), `h_u` is the PT->PU channel such that the received
/// amplitude is `h_u^H w`, `h_s` is the RIS->PU channel with `h_s^H` its row form and
/// `h_bs = diag(h_s^H) H_r^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h_r_herm: CMat,
    pub h_u: CVec,
    pub h_s: CVec,
    pub h_bs: CMat,
}

impl ChannelSet {
    pub fn antennas(&self) -> usize {
        self.h_u.len()
    }

    pub fn elements(&self) -> usize {
        self.h_s.len()
    }

    /// Assemble from the raw pieces, forming the cascade.
    pub fn from_parts(h_r_herm: CMat, h_u: CVec, h_s: CVec) -> Result<Self> {
        if h_r_herm.nrows() != h_s.len() || h_r_herm.ncols() != h_u.len() {
            return Err(Error::Dimension(format!(
                "H_r^H is {}x{}, expected {}x{}",
                h_r_herm.nrows(),
                h_r_herm.ncols(),
                h_s.len(),
                h_u.len()
            )));
        }
        let h_bs = cascade(&h_s, &h_r_herm);
        Ok(Self { h_r_herm, h_u, h_s, h_bs })
    }
}

fn cascade(h_s: &CVec, h_r_herm: &CMat) -> CMat {
    let mut h_bs = h_r_herm.clone();
    for (m, mut row) in h_bs.row_iter_mut().enumerate() {
        row *= h_s[m].conj();
    }
    h_bs
}

/// Links toward one primary user.
#[derive(Debug, Clone, PartialEq)]
pub struct UserLinks {
    pub position: Position3,
    /// PT -> PU.
    pub direct: Link,
    /// RIS -> PU.
    pub reflected: Link,
}

/// Static propagation environment: node geometry plus the random angle/gain draws.
///
/// Antenna positions and RIS element positions are local coordinates relative to the
/// transmit-region origin and the RIS reference point respectively; each primary user
/// receives at its own reference point.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub wavelength: f64,
    pub ris_elements: Vec<Position3>,
    /// PT -> RIS.
    pub incident: Link,
    pub users: Vec<UserLinks>,
}

/// Node placement and propagation constants from which a [`Scene`] is drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneLayout {
    pub wavelength: f64,
    pub transmitter: Position3,
    pub ris: Position3,
    pub users: Vec<Position3>,
    pub ris_elements: usize,
    pub paths: usize,
    /// Linear path-loss gain at 1 m.
    pub pathloss_gain: f64,
    pub pathloss_exponent: f64,
}

impl SceneLayout {
    /// RIS elements on a line along x, half-wavelength spaced and centered on the reference.
    pub fn ris_element_positions(&self) -> Vec<Position3> {
        let m = self.ris_elements;
        let spacing = self.wavelength / 2.0;
        (0..m)
            .map(|i| Position3::new((i as f64 - (m as f64 - 1.0) / 2.0) * spacing, 0.0, 0.0))
            .collect()
    }
}

/// Map a draw from `[-pi/2, pi/2]` into the model's `[0, pi]` angle convention.
pub fn shift_angle(theta: f64) -> f64 {
    theta + FRAC_PI_2
}

fn draw_link<R: Rng + ?Sized>(rng: &mut R, paths: usize, variance: f64) -> Link {
    let uniform = Uniform::new_inclusive(-FRAC_PI_2, FRAC_PI_2).expect("valid interval");
    let mut angles = || -> Vec<f64> { (0..paths).map(|_| shift_angle(uniform.sample(rng))).collect() };
    let transmit_azimuth = angles();
    let transmit_elevation = angles();
    let receive_azimuth = angles();
    let receive_elevation = angles();
    let scale = (variance / 2.0).sqrt();
    let gains = (0..paths)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * scale, im * scale)
        })
        .collect();
    Link {
        angles: PathAngles { transmit_azimuth, transmit_elevation, receive_azimuth, receive_elevation },
        response: PathResponse { gains },
    }
}

impl Scene {
    /// Draw angles uniformly and gains from `CN(0, v Upsilon^-nu / L)`.
    ///
    /// The draw order (incident link, then per user the direct and reflected links) does
    /// not depend on the antenna or element counts.
    pub fn generate<R: Rng + ?Sized>(layout: &SceneLayout, rng: &mut R) -> Result<Self> {
        if !(layout.wavelength > 0.0) {
            return Err(Error::InvalidParameter(format!("wavelength {}", layout.wavelength)));
        }
        if layout.users.is_empty() {
            return Err(Error::InvalidParameter("at least one primary user is required".into()));
        }
        let var = |a: &Position3, b: &Position3| {
            pathloss_variance(a.distance(b), layout.pathloss_gain, layout.pathloss_exponent, layout.paths)
        };
        let incident = draw_link(rng, layout.paths, var(&layout.transmitter, &layout.ris)?);
        let mut users = Vec::with_capacity(layout.users.len());
        for pu in &layout.users {
            let direct = draw_link(rng, layout.paths, var(&layout.transmitter, pu)?);
            let reflected = draw_link(rng, layout.paths, var(&layout.ris, pu)?);
            users.push(UserLinks { position: *pu, direct, reflected });
        }
        Ok(Self {
            wavelength: layout.wavelength,
            ris_elements: layout.ris_element_positions(),
            incident,
            users,
        })
    }

    /// Keep only the first `n` primary users.
    pub fn truncate_users(&mut self, n: usize) {
        self.users.truncate(n);
    }
}

/// Position-independent factors of every channel, cached for repeated rebuilds.
#[derive(Debug, Clone)]
pub struct ChannelSynthesizer {
    wavelength: f64,
    incident: Link,
    /// `F_r^H Sigma_r`, M x L.
    ris_side: CMat,
    users: Vec<UserFactors>,
}

#[derive(Debug, Clone)]
struct UserFactors {
    direct: Link,
    /// `f_u^H Sigma_u` as a row of length L.
    receive_side: CVec,
    h_s: CVec,
}

fn receive_row(link: &Link, at: &Position3, wavelength: f64) -> CVec {
    let f = field_response_vector(at, &link.angles.receive_elevation, &link.angles.receive_azimuth, wavelength);
    CVec::from_iterator(f.len(), f.iter().zip(&link.response.gains).map(|(fi, g)| fi.conj() * g))
}

impl ChannelSynthesizer {
    pub fn new(scene: &Scene) -> Result<Self> {
        let wl = scene.wavelength;
        let l = scene.incident.check("PT-RIS link")?;
        let m = scene.ris_elements.len();
        let mut ris_side = CMat::zeros(m, l);
        for (i, p) in scene.ris_elements.iter().enumerate() {
            let row = receive_row(&scene.incident, p, wl);
            for j in 0..l {
                ris_side[(i, j)] = row[j];
            }
        }
        let mut users = Vec::with_capacity(scene.users.len());
        for (u, links) in scene.users.iter().enumerate() {
            links.direct.check(&format!("PT-PU{u} link"))?;
            let ls = links.reflected.check(&format!("RIS-PU{u} link"))?;
            // The user receives at its own reference point.
            let receive_side = receive_row(&links.direct, &Position3::ORIGIN, wl);
            let s_row = receive_row(&links.reflected, &Position3::ORIGIN, wl);
            // h_s^H = f_s^H Sigma_s G_s with G_s columns at the element positions.
            let mut h_s = CVec::zeros(m);
            for (i, p) in scene.ris_elements.iter().enumerate() {
                let g = field_response_vector(
                    p,
                    &links.reflected.angles.transmit_elevation,
                    &links.reflected.angles.transmit_azimuth,
                    wl,
                );
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..ls {
                    acc += s_row[j] * g[j];
                }
                h_s[i] = acc.conj();
            }
            users.push(UserFactors { direct: links.direct.clone(), receive_side, h_s });
        }
        Ok(Self { wavelength: wl, incident: scene.incident.clone(), ris_side, users })
    }

    pub fn users(&self) -> usize {
        self.users.len()
    }

    pub fn elements(&self) -> usize {
        self.ris_side.nrows()
    }

    /// Channels of every primary user for the given antenna positions.
    pub fn synthesize(&self, positions: &[Position3]) -> Vec<ChannelSet> {
        let k = positions.len();
        let wl = self.wavelength;
        let a = &self.incident.angles;
        let g_r = DMatrix::from_columns(
            &positions
                .iter()
                .map(|p| field_response_vector(p, &a.transmit_elevation, &a.transmit_azimuth, wl))
                .collect::<Vec<_>>(),
        );
        let h_r_herm = if k == 0 { CMat::zeros(self.elements(), 0) } else { &self.ris_side * &g_r };
        self.users
            .iter()
            .map(|u| {
                let d = &u.direct.angles;
                let h_u = CVec::from_iterator(
                    k,
                    positions.iter().map(|p| {
                        let g = field_response_vector(p, &d.transmit_elevation, &d.transmit_azimuth, wl);
                        // h_u^H w = sum_k conj(h_u[k]) w[k], so store the conjugate of the row.
                        u.receive_side.iter().zip(g.iter()).map(|(r, gi)| r * gi).sum::<Complex64>().conj()
                    }),
                );
                ChannelSet::from_parts(h_r_herm.clone(), h_u, u.h_s.clone()).expect("consistent dimensions")
            })
            .collect()
    }
}

/// Channels of every primary user in `scene` for the given antenna positions.
pub fn build_channels(positions: &[Position3], scene: &Scene) -> Result<Vec<ChannelSet>> {
    if positions.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidParameter("non-finite antenna position".into()));
    }
    Ok(ChannelSynthesizer::new(scene)?.synthesize(positions))
}
