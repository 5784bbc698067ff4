//! Dense complex/real matrix aliases and the handful of helpers the models share.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::Float;

pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;
pub type RVec = DVector<f64>;
pub type RMat = DMatrix<f64>;

pub const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `e^{j theta}`.
#[inline]
pub fn cis(theta: f64) -> Complex64 {
    Complex64::new(theta.cos(), theta.sin())
}

/// Column-major `vec(X)`; entry `(m, k)` of an `M x K` matrix lands at `m + M k`.
pub fn vectorize(x: &CMat) -> CVec {
    CVec::from_column_slice(x.as_slice())
}

/// Kronecker product of two column vectors.
pub fn kron(a: &CVec, b: &CVec) -> CVec {
    let mut out = CVec::zeros(a.len() * b.len());
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i * b.len() + j] = ai * bj;
        }
    }
    out
}

/// Largest `|X - X^H|` entry.
pub fn hermitian_deviation(h: &CMat) -> f64 {
    let mut dev = 0.0f64;
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            dev = dev.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn db_to_linear(db: f64) -> f64 {
    Float::powf(10.0, db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// `m += s * f` without allocating.
pub fn add_scaled(m: &mut RMat, s: f64, f: &RMat) {
    m.zip_apply(f, |a, b| *a += s * b);
}

/// Smallest eigenvalue of a real symmetric matrix (`+inf` for an empty one).
pub fn min_eigenvalue(m: &RMat) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}
