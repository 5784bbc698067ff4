//! SCA loops and conic subproblem builders for transmit and passive beamforming.
//!
//! Every builder works in normalized units: channels are divided by the norm of the
//! first user's direct channel and the beamformer by `sqrt(P)`, so powers in the
//! subproblems are `O(1)`. Rates are ratios of powers and unaffected.

mod passive;
mod transmit;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::conic::{
    linearized_square, reduce_bordered, s_procedure_lmi, solve_conic_from, Affine, Ball, CAffine, ConcaveExpr,
    ConicProblem, QuadraticForm, SolveStatus, Tolerances, Var,
};
use crate::linalg::{CMat, CVec};
use crate::rates::{ScenarioParams, UserState};
use crate::{Error, Result};

pub use passive::{
    aligned_phases, build_csr_passive_subproblem, build_passive_subproblem, build_psr_passive_subproblem,
    recover_indices,
    sca_passive, sca_passive_csr, sca_passive_psr, PassiveOutcome, PassiveSubproblem, PhaseSelection,
};
pub use transmit::{
    build_csr_transmit_subproblem, build_psr_transmit_subproblem, build_transmit_subproblem, initial_beamformer,
    sca_transmit, sca_transmit_csr, sca_transmit_psr, TransmitOutcome, TransmitSubproblem,
};

/// Stopping rule and solver settings shared by the SCA loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaOptions {
    pub max_iters: usize,
    /// Stop once `|f_new - f_old| <= rel_tol * |f_old|`.
    pub rel_tol: f64,
    /// Weight of the binary-forcing penalty on the phase selectors.
    pub penalty: f64,
    /// Coordinate ascent over grid phases after recovery.
    pub polish: bool,
    pub tolerances: Tolerances,
}

impl Default for ScaOptions {
    fn default() -> Self {
        Self { max_iters: 30, rel_tol: 1e-3, penalty: 1.0, polish: true, tolerances: Tolerances::default() }
    }
}

/// Iterates of one SCA loop.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScaTrace {
    /// Objective after each iterate, starting with the initial point.
    pub objective: Vec<f64>,
    pub converged: bool,
    /// Set when the loop stopped on a solver failure and kept the last good iterate.
    pub note: Option<String>,
}

impl ScaTrace {
    pub fn iterations(&self) -> usize {
        self.objective.len().saturating_sub(1)
    }

    /// True when no entry drops more than `slack` below its predecessor.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.objective.windows(2).all(|p| p[1] >= p[0] - slack)
    }
}

/// Unit conversion between physical and normalized quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaling {
    /// Channel amplitude unit.
    pub amplitude: f64,
    /// Transmit power budget in watts.
    pub power: f64,
}

impl Scaling {
    pub fn new(users: &[UserState], power: f64) -> Result<Self> {
        let first = users.first().ok_or_else(|| Error::InvalidParameter("no primary users".into()))?;
        if !(power > 0.0) {
            return Err(Error::InvalidParameter(format!("power budget {power}")));
        }
        let a = first.channels.h_u.norm();
        let amplitude = if a > 0.0 { a } else { first.channels.h_bs.norm().max(1.0) };
        Ok(Self { amplitude, power })
    }

    /// Received power unit.
    pub fn power_unit(&self) -> f64 {
        self.power * self.amplitude * self.amplitude
    }

    pub fn normalize_w(&self, w: &CVec) -> CVec {
        w.unscale(self.power.sqrt())
    }

    pub fn physical_w(&self, v: &CVec) -> CVec {
        v.scale(self.power.sqrt())
    }
}

/// One user's channels and radii in normalized units.
#[derive(Debug, Clone)]
struct ScaledUser {
    h_u: CVec,
    h_bs: CMat,
    xi_u: f64,
    xi_bs: f64,
}

impl ScaledUser {
    fn new(user: &UserState, s: &Scaling) -> Self {
        let a = s.amplitude;
        Self {
            h_u: user.channels.h_u.unscale(a),
            h_bs: user.channels.h_bs.unscale(a),
            xi_u: user.uncertainty.xi_u / a,
            xi_bs: user.uncertainty.xi_bs / a,
        }
    }
}

/// Normalized noise power and secondary power threshold.
fn scaled_levels(params: &ScenarioParams, s: &Scaling) -> (f64, f64) {
    let unit = s.power_unit();
    (params.noise_power / unit, params.secondary_power_threshold() / unit)
}

/// Decision vector of complex variables as affine expressions.
fn complex_exprs(vars: &[(Var, Var)]) -> Vec<CAffine> {
    vars.iter().map(|&(re, im)| CAffine::complex(re, im)).collect()
}

/// `sum_k a_k z_k` for constant `a` and affine `z`.
fn inner(a: impl IntoIterator<Item = Complex64>, z: &[CAffine]) -> CAffine {
    let mut out = CAffine::default();
    for (ak, zk) in a.into_iter().zip(z) {
        out += zk * ak;
    }
    out.compact()
}

/// Robust surrogate constraint `|c(y) + beta(y)^T x|^2 - floor(y) >= 0` over the balls,
/// with the square replaced by its tangent lower bound at the expansion point.
#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    pub label: String,
    pub amplitude: CAffine,
    pub coupling: Vec<CAffine>,
    pub floor: Affine,
    /// Tangent form with the floor already subtracted.
    pub form: QuadraticForm,
    pub balls: Vec<Ball>,
    pub multipliers: Vec<Var>,
}

impl Surrogate {
    /// Exact `|c(y) + beta(y)^T x|^2 - floor(y)`.
    pub fn exact(&self, y: &[f64], x: &CVec) -> f64 {
        let mut a = self.amplitude.eval(y);
        for (b, xi) in self.coupling.iter().zip(x.iter()) {
            a += b.eval(y) * xi;
        }
        a.norm_sqr() - self.floor.eval(y)
    }

    /// Surrogate value at decision `y` and error `x`.
    pub fn tangent(&self, y: &[f64], x: &CVec) -> f64 {
        self.form.eval(y, x)
    }
}

/// Add the S-Procedure LMI of a robust surrogate, linearized at `expansion`
/// (a full-length variable assignment), and return its description.
fn add_robust_square(
    problem: &mut ConicProblem,
    amplitude: CAffine,
    coupling: Vec<CAffine>,
    balls: Vec<Ball>,
    floor: Affine,
    expansion: &[f64],
    label: &str,
) -> Result<Surrogate> {
    let n = coupling.len();
    let c0 = amplitude.eval(expansion);
    let beta0 = CVec::from_iterator(n, coupling.iter().map(|b| b.eval(expansion)));
    let mut form = linearized_square(c0, &beta0, &amplitude, &coupling);
    form.p = form.p - floor.clone();
    let multipliers: Vec<Var> = (0..balls.len())
        .map(|i| problem.add_var(format!("{label} multiplier {i}"), Some(0.0), Some(1e6)))
        .collect();
    let lmi = s_procedure_lmi(&form, &balls, &multipliers, label)?;
    let blocks: Vec<_> = balls.iter().map(|b| b.block.clone()).collect();
    let reduced = reduce_bordered(&lmi, &blocks, &multipliers)?;
    problem.add_hermitian_lmi(&reduced)?;
    Ok(Surrogate { label: label.into(), amplitude, coupling, floor, form, balls, multipliers })
}

/// Move `x` into the interior of every LMI of `problem` where it can: the listed
/// multipliers are chosen by coordinate search on a logarithmic grid and, while some
/// block stays indefinite, each of its `levels` variables is relaxed in the direction
/// that raises the block (doubled when its coefficient has positive trace, halved
/// otherwise).
fn interior_start(problem: &ConicProblem, multipliers: &[Var], levels: &[Var], x: &mut [f64]) {
    let grid: Vec<f64> = (-24..=20).map(|k| 10f64.powf(k as f64 / 4.0)).collect();
    for block in &problem.lmis {
        let mults: Vec<Var> = block.terms.iter().map(|t| t.0).filter(|v| multipliers.contains(v)).collect();
        let moves: Vec<(Var, bool)> = block
            .terms
            .iter()
            .filter(|t| levels.contains(&t.0))
            .map(|(v, f)| (*v, f.trace() > 0.0))
            .collect();
        for _ in 0..40 {
            let mut best = block.min_eigenvalue(x);
            for _ in 0..3 {
                for m in &mults {
                    for &g in &grid {
                        let old = x[m.0];
                        x[m.0] = g;
                        let e = block.min_eigenvalue(x);
                        if e > best {
                            best = e;
                        } else {
                            x[m.0] = old;
                        }
                    }
                }
            }
            if best > 0.0 || moves.is_empty() {
                break;
            }
            for &(v, up) in &moves {
                let cap = problem.upper[v.0].map_or(f64::INFINITY, |u| 0.5 * u);
                x[v.0] = if up { (2.0 * x[v.0] + 1e-9).min(cap) } else { 0.5 * x[v.0] };
            }
        }
    }
}

/// `1 / ln 2`, converting natural-log terms to bits.
const INV_LN2: f64 = core::f64::consts::LOG2_E;

/// Max-min composition of per-user concave objectives plus a shared affine term.
///
/// With one user the objective is set directly, so the single-user program is
/// reproduced exactly; otherwise a common level `t` is maximized under
/// `objective_u - t >= 0` for every user.
pub fn multi_pu_wrap(problem: &mut ConicProblem, per_user: Vec<ConcaveExpr>, shared: Affine) -> Result<Option<Var>> {
    match per_user.len() {
        0 => Err(Error::InvalidParameter("no primary users".into())),
        1 => {
            let mut obj = per_user.into_iter().next().unwrap_or_default();
            obj.linear = obj.linear + shared;
            problem.set_objective(obj);
            Ok(None)
        }
        _ => {
            let t = problem.add_var("level", Some(-1e3), Some(1e3));
            for (u, mut obj) in per_user.into_iter().enumerate() {
                obj.linear = obj.linear.plus_term(t, -1.0);
                problem.add_hypograph(obj, &format!("objective level user {u}"));
            }
            problem.set_objective(ConcaveExpr::linear(Affine::var(t) + shared));
            Ok(Some(t))
        }
    }
}

/// Solve one subproblem, mapping solver failures to typed errors.
fn solve_stage(stage: &str, problem: &ConicProblem, tol: &Tolerances, start: Option<&[f64]>) -> Result<Vec<f64>> {
    let sol = solve_conic_from(problem, tol, start);
    match sol.status {
        SolveStatus::Optimal => Ok(sol.x),
        SolveStatus::Infeasible => Err(Error::Infeasible { stage: stage.into(), constraints: sol.binding }),
        SolveStatus::NumericalFailure => Err(Error::NumericalFailure { stage: stage.into(), reason: sol.message }),
    }
}

fn relative_change(old: f64, new: f64) -> f64 {
    (new - old).abs() / old.abs().max(1e-12)
}
