//! Robust transmission design for RIS-assisted symbiotic radio links with a
//! movable-antenna transmitter.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every numerical piece of
//! the pipeline:
//!
//! - [`geometry`]: far-field field-response channels as functions of antenna positions.
//! - [`uncertainty`]: bounded CSI error balls, perturbation sampling and closed-form
//!   worst-case amplitudes.
//! - [`rates`]: primary/secondary rate and SNR expressions for the parasitic (PSR) and
//!   commensal (CSR) scenarios, nominal and robust.
//! - [`conic`]: a small conic-program representation, the S-Procedure and
//!   Sign-Definiteness LMI constructions and an interior-point solver.
//! - [`beamforming`]: the successive convex approximation loops for the transmit
//!   beamformer and the discrete RIS phases.
//! - [`swarm`]: simulated-annealing particle swarm search over antenna positions.
//! - [`ao`]: the alternating-optimization driver, benchmark schemes and a posteriori
//!   robustness verification.
//!
//! File formats, configuration and the command line live in the companion `masr` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod ao;
pub mod beamforming;
pub mod conic;
mod error;
pub mod geometry;
pub mod linalg;
pub mod rates;
pub mod swarm;
pub mod system;
pub mod uncertainty;

pub use error::{Error, Result};
