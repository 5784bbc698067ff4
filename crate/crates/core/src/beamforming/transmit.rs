//! Transmit beamforming with the RIS phases fixed.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::{
    add_robust_square, complex_exprs, inner, interior_start, multi_pu_wrap, relative_change, scaled_levels, solve_stage, ScaOptions,
    ScaTrace, ScaledUser, Scaling, Surrogate, INV_LN2,
};
use crate::conic::{sign_definiteness_lmi, Affine, Ball, CAffine, ConcaveExpr, ConicProblem, Var};
use crate::linalg::{CMat, CVec};
use crate::rates::{robust_objective, secondary_qos_met, Scenario, ScenarioParams, UserState};
use crate::uncertainty::{worst_case_cascaded_amplitude, worst_case_combined_amplitude, worst_case_direct_amplitude};
use crate::uncertainty::{Sense, Sign};
use crate::{Error, Result};

/// Transmit subproblem linearized at one beamformer, in normalized units.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitSubproblem {
    pub problem: ConicProblem,
    /// Real and imaginary parts of `w / sqrt(P)`.
    pub w_vars: Vec<(Var, Var)>,
    /// Per user: worst-case direct (PSR) or `+` combined (CSR) power.
    pub eps_u: Vec<Var>,
    /// Per user: worst-case interference (PSR) or `-` combined power (CSR).
    pub eps_h: Vec<Var>,
    pub surrogates: Vec<Surrogate>,
    /// Every S-procedure multiplier, including those of the interference blocks.
    pub multipliers: Vec<Var>,
    /// Assignment of the expansion point (decision part only, zeros elsewhere).
    pub expansion: Vec<f64>,
    pub scaling: Scaling,
}

impl TransmitSubproblem {
    /// Physical beamformer from a solution vector.
    pub fn beamformer(&self, x: &[f64]) -> CVec {
        let v = CVec::from_iterator(self.w_vars.len(), self.w_vars.iter().map(|(re, im)| Complex64::new(x[re.0], x[im.0])));
        self.scaling.physical_w(&v)
    }

    /// Warm start just inside the power budget at a physical beamformer, with the power
    /// levels near their closed forms and the multipliers fitted to the blocks.
    pub fn start_point(&self, params: &ScenarioParams, users: &[UserState], psi: &CVec, w: &CVec) -> Vec<f64> {
        let mut x = vec![0.0; self.problem.num_vars()];
        let w = &w.scale(1.0 - 1e-4);
        let v = self.scaling.normalize_w(w);
        for (i, (re, im)) in self.w_vars.iter().enumerate() {
            x[re.0] = v[i].re;
            x[im.0] = v[i].im;
        }
        let unit = self.scaling.power_unit();
        for (u, user) in users.iter().enumerate() {
            let (lo, hi) = power_levels(params, user, psi, w);
            x[self.eps_u[u].0] = 0.9 * lo / unit;
            x[self.eps_h[u].0] = match params.scenario {
                Scenario::Psr => 1.1 * hi / unit + 1e-12,
                Scenario::Csr => 0.9 * hi / unit,
            };
        }
        let levels: Vec<Var> = self.eps_u.iter().chain(&self.eps_h).copied().collect();
        interior_start(&self.problem, &self.multipliers, &levels, &mut x);
        x
    }
}

/// Closed-form `(eps_u, eps_h)` of one user in physical units.
pub(super) fn power_levels(params: &ScenarioParams, user: &UserState, psi: &CVec, w: &CVec) -> (f64, f64) {
    let ch = &user.channels;
    let unc = &user.uncertainty;
    match params.scenario {
        Scenario::Psr => {
            let s = worst_case_direct_amplitude(&ch.h_u, w, unc.xi_u, Sense::Min);
            let i = worst_case_cascaded_amplitude(&ch.h_bs, psi, w, unc.xi_bs, Sense::Max);
            (s * s, i * i)
        }
        Scenario::Csr => {
            let amp = |sign| worst_case_combined_amplitude(&ch.h_u, &ch.h_bs, psi, w, unc.xi_u, unc.xi_bs, sign);
            let (p, m) = (amp(Sign::Plus), amp(Sign::Minus));
            (p * p, m * m)
        }
    }
}

fn check_dims(users: &[UserState], psi: &CVec, w: &CVec) -> Result<()> {
    for u in users {
        if u.channels.h_u.len() != w.len() || u.channels.h_bs.ncols() != w.len() || u.channels.h_bs.nrows() != psi.len() {
            return Err(Error::Dimension(format!(
                "channels are {}x{} but w has {} and psi {} entries",
                u.channels.h_bs.nrows(),
                u.channels.h_bs.ncols(),
                w.len(),
                psi.len()
            )));
        }
    }
    Ok(())
}

/// `beta_{m + M k} = s * conj(psi_m) * v_k`, the coupling of `vec(dH_bs)`.
fn cascade_coupling(v: &[CAffine], psi: &CVec, sign: f64) -> Vec<CAffine> {
    let m = psi.len();
    let mut out = Vec::with_capacity(m * v.len());
    for vk in v {
        for pm in psi.iter() {
            out.push(vk * (pm.conj() * sign));
        }
    }
    out
}

/// Convex transmit subproblem at `w_n`, for either scenario.
pub fn build_transmit_subproblem(
    params: &ScenarioParams,
    users: &[UserState],
    psi: &CVec,
    w_n: &CVec,
    power: f64,
) -> Result<TransmitSubproblem> {
    params.validate()?;
    check_dims(users, psi, w_n)?;
    let scaling = Scaling::new(users, power)?;
    let (noise, thr) = scaled_levels(params, &scaling);
    let v_n = scaling.normalize_w(w_n);
    let (k, m) = (w_n.len(), psi.len());

    let mut problem = ConicProblem::new();
    let w_vars: Vec<(Var, Var)> = (0..k).map(|i| problem.add_complex_var(&format!("w{i}"), 1.0)).collect();
    let v = complex_exprs(&w_vars);
    let mut point = vec![0.0; problem.num_vars()];
    for (i, &(re, im)) in w_vars.iter().enumerate() {
        point[re.0] = v_n[i].re;
        point[im.0] = v_n[i].im;
    }
    let rows = w_vars.iter().flat_map(|&(re, im)| [Affine::var(re), Affine::var(im)]).collect();
    problem.add_cone(rows, Affine::constant(1.0), "power budget");

    let mut eps_u = Vec::new();
    let mut eps_h = Vec::new();
    let mut surrogates = Vec::new();
    let mut multipliers = Vec::new();
    let mut objectives = Vec::new();
    for (u, user) in users.iter().enumerate() {
        let su = ScaledUser::new(user, &scaling);
        let a = su.h_bs.tr_mul(&psi.conjugate());
        let d = su.h_u.conjugate();
        let eu = problem.add_var(format!("eps_u{u}"), Some(0.0), Some(1e3));
        let eh = problem.add_var(format!("eps_h{u}"), Some(0.0), Some(1e3));
        eps_u.push(eu);
        eps_h.push(eh);
        point.resize(problem.num_vars(), 0.0);

        let cascade = inner(a.iter().copied(), &v);
        let qos = format!("secondary QoS user {u}");
        if m > 0 {
            let s = add_robust_square(
                &mut problem,
                cascade.clone(),
                cascade_coupling(&v, psi, 1.0),
                vec![Ball { block: 0..m * k, radius: su.xi_bs }],
                Affine::constant(thr),
                &point,
                &qos,
            )?;
            surrogates.push(s);
            point.resize(problem.num_vars(), 0.0);
        } else if thr > 0.0 {
            return Err(Error::Infeasible { stage: "transmit beamforming".into(), constraints: vec![qos] });
        }

        match params.scenario {
            Scenario::Psr => {
                let s = add_robust_square(
                    &mut problem,
                    inner(d.iter().copied(), &v),
                    v.clone(),
                    vec![Ball { block: 0..k, radius: su.xi_u }],
                    Affine::var(eu),
                    &point,
                    &format!("direct power user {u}"),
                )?;
                surrogates.push(s);
                if m > 0 {
                    let b1 = problem.add_var(format!("interference multiplier {u}"), Some(0.0), Some(1e6));
                    multipliers.push(b1);
                    let b = vec![
                        vec![CAffine::real(eh), cascade.clone()],
                        vec![cascade.conj(), CAffine::constant(Complex64::new(1.0, 0.0))],
                    ];
                    let l: Vec<Vec<CAffine>> = v.iter().map(|vk| vec![CAffine::default(), vk.clone()]).collect();
                    let mut gram = CMat::zeros(2, 2);
                    gram[(0, 0)] = Complex64::new(psi.norm_squared(), 0.0);
                    let lmi = sign_definiteness_lmi(&b, &l, &gram, su.xi_bs, b1, &format!("interference user {u}"))?;
                    problem.add_hermitian_lmi(&lmi)?;
                }
                let i_n = worst_case_cascaded_amplitude(&su.h_bs, psi, &v_n, su.xi_bs, Sense::Max).powi(2);
                let base = noise + i_n;
                let linear = Affine::term(eh, -INV_LN2 / base).plus_constant(INV_LN2 * i_n / base - base.log2());
                let arg = Affine::var(eu).plus_term(eh, 1.0).plus_constant(noise);
                objectives.push(ConcaveExpr::linear(linear).with_log(INV_LN2, arg));
            }
            Scenario::Csr => {
                for (sign, eps, name) in [(1.0, eu, "sum"), (-1.0, eh, "difference")] {
                    let amp = inner(d.iter().zip(a.iter()).map(|(dk, ak)| dk + ak * sign), &v);
                    let mut coupling = v.clone();
                    let mut balls = vec![Ball { block: 0..k, radius: su.xi_u }];
                    if m > 0 {
                        coupling.extend(cascade_coupling(&v, psi, sign));
                        balls.push(Ball { block: k..k + m * k, radius: su.xi_bs });
                    }
                    let s = add_robust_square(
                        &mut problem,
                        amp,
                        coupling,
                        balls,
                        Affine::var(eps),
                        &point,
                        &format!("{name} power user {u}"),
                    )?;
                    surrogates.push(s);
                    point.resize(problem.num_vars(), 0.0);
                }
                let obj = ConcaveExpr::linear(Affine::constant(-noise.log2()))
                    .with_log(0.5 * INV_LN2, Affine::var(eu).plus_constant(noise))
                    .with_log(0.5 * INV_LN2, Affine::var(eh).plus_constant(noise));
                objectives.push(obj);
            }
        }
        point.resize(problem.num_vars(), 0.0);
    }
    multi_pu_wrap(&mut problem, objectives, Affine::default())?;
    multipliers.extend(surrogates.iter().flat_map(|s: &Surrogate| s.multipliers.iter().copied()));
    point.resize(problem.num_vars(), 0.0);
    Ok(TransmitSubproblem { problem, w_vars, eps_u, eps_h, surrogates, multipliers, expansion: point, scaling })
}

pub(super) fn expect_scenario(params: &ScenarioParams, want: Scenario) -> Result<()> {
    if params.scenario != want {
        return Err(Error::InvalidParameter(format!("expected the {} scenario", want.name())));
    }
    Ok(())
}

pub fn build_psr_transmit_subproblem(
    params: &ScenarioParams,
    users: &[UserState],
    psi: &CVec,
    w_n: &CVec,
    power: f64,
) -> Result<TransmitSubproblem> {
    expect_scenario(params, Scenario::Psr)?;
    build_transmit_subproblem(params, users, psi, w_n, power)
}

pub fn build_csr_transmit_subproblem(
    params: &ScenarioParams,
    users: &[UserState],
    psi: &CVec,
    w_n: &CVec,
    power: f64,
) -> Result<TransmitSubproblem> {
    expect_scenario(params, Scenario::Csr)?;
    build_transmit_subproblem(params, users, psi, w_n, power)
}

/// Result of a transmit SCA loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitOutcome {
    pub w: CVec,
    /// Robust objective (bps/Hz) of every accepted iterate.
    pub trace: ScaTrace,
}

/// Full-power start: matched filter to the first user's direct channel, blended
/// toward the cascaded direction until the worst-case secondary QoS holds.
pub fn initial_beamformer(params: &ScenarioParams, users: &[UserState], psi: &CVec, power: f64) -> Result<CVec> {
    let first = users.first().ok_or_else(|| Error::InvalidParameter("no primary users".into()))?;
    let k = first.channels.h_u.len();
    let unit = |x: CVec| -> CVec {
        let n = x.norm();
        if n > 0.0 {
            x.unscale(n)
        } else {
            CVec::from_element(k, Complex64::new(1.0 / (k as f64).sqrt(), 0.0))
        }
    };
    let direct = unit(first.channels.h_u.clone());
    let cascade = first.channels.h_bs.ad_mul(psi);
    let cascade = if cascade.norm() > 0.0 {
        // Rotate so that both contributions add in phase at the first user.
        let phase = direct.dotc(&cascade);
        let rot = if phase.norm() > 0.0 { phase.conj() / phase.norm() } else { Complex64::new(1.0, 0.0) };
        unit(cascade) * rot
    } else {
        direct.clone()
    };
    for step in 0..=20 {
        let alpha = step as f64 / 20.0;
        let w = unit(direct.scale(1.0 - alpha) + cascade.scale(alpha)).scale(power.sqrt());
        if secondary_qos_met(params, users, &w, psi, 0.0) {
            return Ok(w);
        }
    }
    Err(Error::Infeasible { stage: "initialization".into(), constraints: vec![String::from("secondary QoS")] })
}

/// Successive convex approximation of the transmit beamformer from a feasible `w0`.
pub fn sca_transmit(
    params: &ScenarioParams,
    users: &[UserState],
    psi: &CVec,
    w0: &CVec,
    power: f64,
    opts: &ScaOptions,
) -> Result<TransmitOutcome> {
    let mut w = w0.clone();
    let mut f = robust_objective(params, users, &w, psi);
    let mut trace = ScaTrace { objective: vec![f], ..ScaTrace::default() };
    for _ in 0..opts.max_iters {
        let sub = build_transmit_subproblem(params, users, psi, &w, power)?;
        let start = sub.start_point(params, users, psi, &w);
        let x = match solve_stage("transmit beamforming", &sub.problem, &opts.tolerances, Some(&start)) {
            Ok(x) => x,
            Err(Error::NumericalFailure { reason, .. }) => {
                trace.note = Some(reason);
                break;
            }
            Err(e) => return Err(e),
        };
        let w_new = sub.beamformer(&x);
        let f_new = robust_objective(params, users, &w_new, psi);
        if !(f_new >= f) || !secondary_qos_met(params, users, &w_new, psi, 1e-9) {
            trace.converged = true;
            trace.note = Some("non-improving step discarded".into());
            break;
        }
        let change = relative_change(f, f_new);
        w = w_new;
        f = f_new;
        trace.objective.push(f);
        if change < opts.rel_tol {
            trace.converged = true;
            break;
        }
    }
    Ok(TransmitOutcome { w, trace })
}

pub fn sca_transmit_psr(
    params: &ScenarioParams,
    users: &[UserState],
    psi: &CVec,
    w0: &CVec,
    power: f64,
    opts: &ScaOptions,
) -> Result<TransmitOutcome> {
    expect_scenario(params, Scenario::Psr)?;
    sca_transmit(params, users, psi, w0, power, opts)
}

pub fn sca_transmit_csr(
    params: &ScenarioParams,
    users: &[UserState],
    psi: &CVec,
    w0: &CVec,
    power: f64,
    opts: &ScaOptions,
) -> Result<TransmitOutcome> {
    expect_scenario(params, Scenario::Csr)?;
    sca_transmit(params, users, psi, w0, power, opts)
}
