//! Discrete RIS phase design with the beamformer fixed.
//!
//! Each element picks one of `levels` grid phases through selectors `c_{m,i} in [0, 1]`
//! with `sum_i c_{m,i} <= 1` and `psi_m = sum_i c_{m,i} e^{j 2 pi i / levels}`. The
//! selectors are pushed toward `{0, 1}` by a linearized penalty on `c - c^2`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::transmit::{expect_scenario, power_levels};
use super::{
    add_robust_square, complex_exprs, inner, interior_start, multi_pu_wrap, relative_change, scaled_levels, solve_stage, ScaOptions,
    ScaTrace, ScaledUser, Scaling, Surrogate, INV_LN2,
};
use crate::conic::{sign_definiteness_lmi, Affine, Ball, CAffine, ConcaveExpr, ConicProblem, Var};
use crate::linalg::{CMat, CVec};
use crate::rates::{grid_phase, robust_objective, secondary_qos_met, PhaseVector, Scenario, ScenarioParams, UserState};
use crate::rates::robust_secondary_snr_min;
use crate::uncertainty::{worst_case_cascaded_amplitude, worst_case_direct_amplitude, Sense};
use crate::{Error, Result};

/// Relaxed selectors and the grid phases recovered from them.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSelection {
    /// `selectors[m][i]` weights grid phase `i` at element `m`.
    pub selectors: Vec<Vec<f64>>,
    pub recovered: PhaseVector,
}

impl PhaseSelection {
    /// One-hot selectors of a grid configuration.
    pub fn one_hot(phases: &PhaseVector) -> Self {
        let selectors = phases
            .indices
            .iter()
            .map(|&i| (0..phases.levels).map(|j| if j == i { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { selectors, recovered: phases.clone() }
    }

    /// `max_m min_i min(c, 1 - c)`: zero for binary selectors.
    pub fn binarity_gap(&self) -> f64 {
        self.selectors
            .iter()
            .map(|row| row.iter().map(|&c| c.min(1.0 - c)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    }

    /// `sum c - c^2`, the quantity the penalty drives to zero.
    pub fn fractionality(&self) -> f64 {
        self.selectors.iter().flatten().map(|&c| c - c * c).sum()
    }
}

/// Index of the largest selector per element, smallest index on ties.
pub fn recover_indices(selectors: &[Vec<f64>], levels: usize) -> PhaseVector {
    let indices = selectors
        .iter()
        .map(|row| {
            let mut best = 0;
            for (i, &c) in row.iter().enumerate() {
                if c > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect();
    PhaseVector { indices, levels }
}

/// `psi = sum_i c_i e^{j f_i}` per element.
fn selectors_to_psi(selectors: &[Vec<f64>], levels: usize) -> CVec {
    CVec::from_iterator(
        selectors.len(),
        selectors.iter().map(|row| row.iter().enumerate().map(|(i, &c)| grid_phase(i, levels) * c).sum()),
    )
}

/// Passive subproblem linearized at one relaxed phase vector, in normalized units.
#[derive(Debug, Clone, PartialEq)]
pub struct PassiveSubproblem {
    pub problem: ConicProblem,
    pub psi_vars: Vec<(Var, Var)>,
    /// `c_vars[m][i]`.
    pub c_vars: Vec<Vec<Var>>,
    /// Per user combined `+` power (CSR only).
    pub eps_u: Vec<Var>,
    /// Per user worst-case interference (PSR) or `-` combined power (CSR).
    pub eps_h: Vec<Var>,
    pub surrogates: Vec<Surrogate>,
    /// Every S-procedure multiplier, including those of the interference blocks.
    pub multipliers: Vec<Var>,
    pub expansion: Vec<f64>,
    pub scaling: Scaling,
    pub levels: usize,
}

impl PassiveSubproblem {
    pub fn selectors(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.c_vars.iter().map(|row| row.iter().map(|v| x[v.0].clamp(0.0, 1.0)).collect()).collect()
    }

    /// Strictly interior start near the expansion point: selectors pulled slightly
    /// toward uniform, power levels near their closed forms and fitted multipliers.
    pub fn start_point(&self, params: &ScenarioParams, users: &[UserState], w: &CVec) -> Vec<f64> {
        let mut x = self.expansion.clone();
        let n = self.levels as f64;
        for (row, (re, im)) in self.c_vars.iter().zip(&self.psi_vars) {
            let mut psi = Complex64::new(0.0, 0.0);
            for (i, c) in row.iter().enumerate() {
                x[c.0] = 0.98 * x[c.0] + 0.01 / n;
                psi += grid_phase(i, self.levels) * x[c.0];
            }
            x[re.0] = psi.re;
            x[im.0] = psi.im;
        }
        let psi = self.psi(&x);
        let unit = self.scaling.power_unit();
        for (u, user) in users.iter().enumerate() {
            let (lo, hi) = power_levels(params, user, &psi, w);
            match params.scenario {
                Scenario::Psr => x[self.eps_h[u].0] = 1.1 * hi / unit + 1e-12,
                Scenario::Csr => {
                    x[self.eps_u[u].0] = 0.9 * lo / unit;
                    x[self.eps_h[u].0] = 0.9 * hi / unit;
                }
            }
        }
        let levels: Vec<Var> = self.eps_u.iter().chain(&self.eps_h).copied().collect();
        interior_start(&self.problem, &self.multipliers, &levels, &mut x);
        x
    }

    pub fn psi(&self, x: &[f64]) -> CVec {
        CVec::from_iterator(self.psi_vars.len(), self.psi_vars.iter().map(|(re, im)| Complex64::new(x[re.0], x[im.0])))
    }
}

/// Convex passive subproblem at the relaxed point `c_r` (with `psi_r` its phase vector).
#[allow(clippy::too_many_arguments)]
pub fn build_passive_subproblem(
    params: &ScenarioParams,
    users: &[UserState],
    w: &CVec,
    c_r: &[Vec<f64>],
    levels: usize,
    penalty: f64,
    power: f64,
) -> Result<PassiveSubproblem> {
    params.validate()?;
    if levels == 0 || c_r.iter().any(|row| row.len() != levels) {
        return Err(Error::Dimension(format!("selectors must have {levels} columns")));
    }
    let m = c_r.len();
    let k = w.len();
    for u in users {
        if u.channels.h_bs.nrows() != m || u.channels.h_bs.ncols() != k || u.channels.h_u.len() != k {
            return Err(Error::Dimension(format!("channels do not match M = {m}, K = {k}")));
        }
    }
    if !(penalty >= 0.0) {
        return Err(Error::InvalidParameter(format!("penalty {penalty}")));
    }
    let scaling = Scaling::new(users, power)?;
    let (noise, thr) = scaled_levels(params, &scaling);
    let v = scaling.normalize_w(w);
    let psi_r = selectors_to_psi(c_r, levels);

    let mut problem = ConicProblem::new();
    let psi_vars: Vec<(Var, Var)> = (0..m).map(|i| problem.add_complex_var(&format!("psi{i}"), 1.0)).collect();
    let c_vars: Vec<Vec<Var>> = (0..m)
        .map(|e| (0..levels).map(|i| problem.add_var(format!("c{e}_{i}"), Some(0.0), Some(1.0))).collect())
        .collect();
    let mut point = vec![0.0; problem.num_vars()];
    for e in 0..m {
        let (re, im) = psi_vars[e];
        point[re.0] = psi_r[e].re;
        point[im.0] = psi_r[e].im;
        for i in 0..levels {
            point[c_vars[e][i].0] = c_r[e][i];
        }
    }
    let mut penalty_term = Affine::default();
    for e in 0..m {
        let (re, im) = psi_vars[e];
        let mut sum = Affine::constant(1.0);
        let mut eq_re = Affine::var(re);
        let mut eq_im = Affine::var(im);
        for i in 0..levels {
            let f = grid_phase(i, levels);
            let c = c_vars[e][i];
            sum = sum.plus_term(c, -1.0);
            eq_re = eq_re.plus_term(c, -f.re);
            eq_im = eq_im.plus_term(c, -f.im);
            let cr = c_r[e][i];
            penalty_term = penalty_term.plus_term(c, -penalty * (1.0 - 2.0 * cr)).plus_constant(-penalty * cr * cr);
        }
        problem.add_inequality(sum, &format!("single selection element {e}"));
        problem.add_equality(eq_re.compact(), &format!("phase synthesis element {e} re"));
        problem.add_equality(eq_im.compact(), &format!("phase synthesis element {e} im"));
    }
    let psi_conj: Vec<CAffine> = complex_exprs(&psi_vars).iter().map(CAffine::conj).collect();

    let mut eps_u = Vec::new();
    let mut eps_h = Vec::new();
    let mut surrogates = Vec::new();
    let mut multipliers = Vec::new();
    let mut objectives = Vec::new();
    let w_norm = v.norm();
    for (u, user) in users.iter().enumerate() {
        let su = ScaledUser::new(user, &scaling);
        let hw = &su.h_bs * &v;
        let cascade = inner(hw.iter().copied(), &psi_conj);
        let coupling = |sign: f64| -> Vec<CAffine> {
            let mut out = Vec::with_capacity(m * k);
            for vk in v.iter() {
                for pc in &psi_conj {
                    out.push(pc * (vk * sign));
                }
            }
            out
        };
        point.resize(problem.num_vars(), 0.0);
        let s = add_robust_square(
            &mut problem,
            cascade.clone(),
            coupling(1.0),
            vec![Ball { block: 0..m * k, radius: su.xi_bs }],
            Affine::constant(thr),
            &point,
            &format!("secondary QoS user {u}"),
        )?;
        surrogates.push(s);
        match params.scenario {
            Scenario::Psr => {
                let eh = problem.add_var(format!("eps_h{u}"), Some(0.0), Some(1e3));
                let b1 = problem.add_var(format!("interference multiplier {u}"), Some(0.0), Some(1e6));
                multipliers.push(b1);
                eps_h.push(eh);
                let b = vec![
                    vec![CAffine::real(eh), cascade.clone()],
                    vec![cascade.conj(), CAffine::constant(Complex64::new(1.0, 0.0))],
                ];
                let l = vec![vec![CAffine::default(), CAffine::constant(Complex64::new(w_norm, 0.0))]];
                let mut gram = CMat::zeros(2, 2);
                gram[(0, 0)] = Complex64::new(m as f64, 0.0);
                let lmi = sign_definiteness_lmi(&b, &l, &gram, su.xi_bs, b1, &format!("interference user {u}"))?;
                problem.add_hermitian_lmi(&lmi)?;
                let e_u = worst_case_direct_amplitude(&su.h_u, &v, su.xi_u, Sense::Min).powi(2);
                let i_r = worst_case_cascaded_amplitude(&su.h_bs, &psi_r, &v, su.xi_bs, Sense::Max).powi(2);
                let base = noise + i_r;
                let linear = Affine::term(eh, -INV_LN2 / base).plus_constant(INV_LN2 * i_r / base - base.log2());
                objectives.push(ConcaveExpr::linear(linear).with_log(INV_LN2, Affine::var(eh).plus_constant(noise + e_u)));
            }
            Scenario::Csr => {
                let eu = problem.add_var(format!("eps_u{u}"), Some(0.0), Some(1e3));
                let eh = problem.add_var(format!("eps_h{u}"), Some(0.0), Some(1e3));
                eps_u.push(eu);
                eps_h.push(eh);
                let direct = su.h_u.dotc(&v);
                for (sign, eps, name) in [(1.0, eu, "sum"), (-1.0, eh, "difference")] {
                    let mut amp = &cascade * Complex64::new(sign, 0.0);
                    amp.constant += direct;
                    let mut cpl: Vec<CAffine> = v.iter().map(|vk| CAffine::constant(*vk)).collect();
                    cpl.extend(coupling(sign));
                    let balls =
                        vec![Ball { block: 0..k, radius: su.xi_u }, Ball { block: k..k + m * k, radius: su.xi_bs }];
                    point.resize(problem.num_vars(), 0.0);
                    let s = add_robust_square(
                        &mut problem,
                        amp,
                        cpl,
                        balls,
                        Affine::var(eps),
                        &point,
                        &format!("{name} power user {u}"),
                    )?;
                    surrogates.push(s);
                }
                objectives.push(
                    ConcaveExpr::linear(Affine::constant(-noise.log2()))
                        .with_log(0.5 * INV_LN2, Affine::var(eu).plus_constant(noise))
                        .with_log(0.5 * INV_LN2, Affine::var(eh).plus_constant(noise)),
                );
            }
        }
    }
    multi_pu_wrap(&mut problem, objectives, penalty_term.compact())?;
    multipliers.extend(surrogates.iter().flat_map(|s: &Surrogate| s.multipliers.iter().copied()));
    point.resize(problem.num_vars(), 0.0);
    Ok(PassiveSubproblem { problem, psi_vars, c_vars, eps_u, eps_h, surrogates, multipliers, expansion: point, scaling, levels })
}

pub fn build_psr_passive_subproblem(
    params: &ScenarioParams,
    users: &[UserState],
    w: &CVec,
    c_r: &[Vec<f64>],
    levels: usize,
    penalty: f64,
    power: f64,
) -> Result<PassiveSubproblem> {
    expect_scenario(params, Scenario::Psr)?;
    build_passive_subproblem(params, users, w, c_r, levels, penalty, power)
}

pub fn build_csr_passive_subproblem(
    params: &ScenarioParams,
    users: &[UserState],
    w: &CVec,
    c_r: &[Vec<f64>],
    levels: usize,
    penalty: f64,
    power: f64,
) -> Result<PassiveSubproblem> {
    expect_scenario(params, Scenario::Csr)?;
    build_passive_subproblem(params, users, w, c_r, levels, penalty, power)
}

/// Result of a passive SCA loop.
#[derive(Debug, Clone, PartialEq)]
pub struct PassiveOutcome {
    pub phases: PhaseVector,
    /// Selectors at the last relaxed iterate and their recovered grid point.
    pub selection: PhaseSelection,
    /// Penalized robust objective of the relaxed iterates.
    pub trace: ScaTrace,
    /// Robust objective at `phases`.
    pub objective: f64,
    /// Grid evaluations spent in feasibility repair and polishing.
    pub grid_evaluations: usize,
}

/// Best level of element `e` under `score`, evaluated over the whole grid.
fn best_level(
    phases: &PhaseVector,
    e: usize,
    evals: &mut usize,
    mut score: impl FnMut(&PhaseVector) -> Option<f64>,
) -> (usize, Option<f64>) {
    let mut trial = phases.clone();
    let mut best = (phases.indices[e], None::<f64>);
    for i in 0..phases.levels {
        trial.indices[e] = i;
        *evals += 1;
        if let Some(s) = score(&trial) {
            if best.1.map_or(true, |b| s > b) {
                best = (i, Some(s));
            }
        }
    }
    best
}

/// Phase design by SCA over relaxed selectors, followed by grid recovery, feasibility
/// repair and (optionally) coordinate ascent. Never returns a grid point worse than a
/// feasible `start`.
pub fn sca_passive(
    params: &ScenarioParams,
    users: &[UserState],
    w: &CVec,
    start: &PhaseVector,
    power: f64,
    opts: &ScaOptions,
) -> Result<PassiveOutcome> {
    let levels = start.levels;
    let eta = opts.penalty;
    let feasible = |p: &PhaseVector| secondary_qos_met(params, users, w, &p.to_complex(), 1e-9);
    let value = |p: &PhaseVector| robust_objective(params, users, w, &p.to_complex());
    let penalized = |sel: &PhaseSelection| -> f64 {
        robust_objective(params, users, w, &selectors_to_psi(&sel.selectors, levels)) - eta * sel.fractionality()
    };

    let mut sel = PhaseSelection::one_hot(start);
    let mut f = penalized(&sel);
    let mut trace = ScaTrace { objective: vec![f], ..ScaTrace::default() };
    let start_ok = feasible(start);
    if start_ok && !start.is_empty() {
        for _ in 0..opts.max_iters {
            let sub = build_passive_subproblem(params, users, w, &sel.selectors, levels, eta, power)?;
            let x = match solve_stage("passive beamforming", &sub.problem, &opts.tolerances, Some(&sub.start_point(params, users, w))) {
                Ok(x) => x,
                Err(Error::NumericalFailure { reason, .. }) => {
                    trace.note = Some(reason);
                    break;
                }
                Err(e) => return Err(e),
            };
            let selectors = sub.selectors(&x);
            let next = PhaseSelection { recovered: recover_indices(&selectors, levels), selectors };
            let f_new = penalized(&next);
            if !(f_new >= f) {
                trace.converged = true;
                trace.note = Some("non-improving step discarded".into());
                break;
            }
            let change = relative_change(f, f_new);
            sel = next;
            f = f_new;
            trace.objective.push(f);
            if change < opts.rel_tol {
                trace.converged = true;
                break;
            }
        }
    }

    let mut evals = 0;
    let mut phases = sel.recovered.clone();
    if !feasible(&phases) {
        // One coordinate sweep toward feasibility, then toward the objective.
        for e in 0..phases.len() {
            let (i, _) = best_level(&phases, e, &mut evals, |p| {
                let psi = p.to_complex();
                if secondary_qos_met(params, users, w, &psi, 1e-9) {
                    Some(1e6 + robust_objective(params, users, w, &psi))
                } else {
                    Some(robust_secondary_snr_min(params, users, w, &psi))
                }
            });
            phases.indices[e] = i;
        }
    }
    let mut best = if feasible(&phases) { Some((value(&phases), phases)) } else { None };
    if start_ok {
        let v0 = value(start);
        if best.as_ref().map_or(true, |(v, _)| v0 > *v) {
            best = Some((v0, start.clone()));
        }
    }
    let (mut objective, mut phases) = best.ok_or(Error::NoFeasiblePhase)?;
    if opts.polish {
        // A common grid rotation moves the cascaded term relative to the direct one
        // without changing its magnitude, which single-element moves rarely achieve.
        let mut rotated = phases.clone();
        for _ in 1..levels {
            for i in rotated.indices.iter_mut() {
                *i = (*i + 1) % levels;
            }
            evals += 1;
            if feasible(&rotated) {
                let s = value(&rotated);
                if s > objective {
                    objective = s;
                    phases = rotated.clone();
                }
            }
        }
        for _ in 0..5 {
            let mut improved = false;
            for e in 0..phases.len() {
                let (i, s) = best_level(&phases, e, &mut evals, |p| if feasible(p) { Some(value(p)) } else { None });
                if let Some(s) = s {
                    if s > objective {
                        phases.indices[e] = i;
                        objective = s;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }
    Ok(PassiveOutcome { phases, selection: sel, trace, objective, grid_evaluations: evals })
}

pub fn sca_passive_psr(
    params: &ScenarioParams,
    users: &[UserState],
    w: &CVec,
    start: &PhaseVector,
    power: f64,
    opts: &ScaOptions,
) -> Result<PassiveOutcome> {
    expect_scenario(params, Scenario::Psr)?;
    sca_passive(params, users, w, start, power, opts)
}

pub fn sca_passive_csr(
    params: &ScenarioParams,
    users: &[UserState],
    w: &CVec,
    start: &PhaseVector,
    power: f64,
    opts: &ScaOptions,
) -> Result<PassiveOutcome> {
    expect_scenario(params, Scenario::Csr)?;
    sca_passive(params, users, w, start, power, opts)
}

/// Grid phases that put each cascaded term in phase with the direct signal of the
/// first user.
pub fn aligned_phases(user: &UserState, w: &CVec, levels: usize) -> PhaseVector {
    let d = user.channels.h_u.dotc(w);
    let hw = &user.channels.h_bs * w;
    let target = CVec::from_iterator(hw.len(), hw.iter().map(|z| z * d.conj()));
    PhaseVector::project(&target, levels)
}
