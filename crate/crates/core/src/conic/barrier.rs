//! Primal log-barrier path-following solver.
//!
//! Equalities are eliminated by pivoted row reduction; each objective log term becomes
//! an auxiliary variable under the 2-self-concordant barrier of `{(y, s): s <= ln y}`.
//! A feasibility phase minimizes a uniform relaxation `s` of every constraint.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Cholesky;

use super::{Affine, ConcaveExpr, ConicProblem};
use crate::linalg::{add_scaled, RMat, RVec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Certified bound `nu / t` on the objective suboptimality.
    pub gap: f64,
    /// Largest accepted PSD, inequality and equality violation of a returned point.
    pub feasibility: f64,
    /// Gap still accepted when Newton steps stop making progress.
    pub stall_gap: f64,
    pub max_newton: usize,
    /// Barrier parameter growth per outer iteration.
    pub mu: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { gap: 1e-8, feasibility: 1e-6, stall_gap: 1e-5, max_newton: 800, mu: 20.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub gap: f64,
    pub newton_steps: usize,
    pub min_psd_eigenvalue: f64,
    pub equality_residual: f64,
    /// Constraint families most violated when feasibility search gave up.
    pub binding: Vec<String>,
    pub message: String,
}

impl Solution {
    fn failure(status: SolveStatus, n: usize, message: impl Into<String>) -> Self {
        Self {
            status,
            x: vec![0.0; n],
            objective: f64::NAN,
            gap: f64::INFINITY,
            newton_steps: 0,
            min_psd_eigenvalue: f64::NAN,
            equality_residual: f64::NAN,
            binding: Vec::new(),
            message: message.into(),
        }
    }
}

/// Affine map `a^T v + b` over the working variables.
#[derive(Debug, Clone)]
struct Aff {
    a: RVec,
    b: f64,
}

impl Aff {
    fn eval(&self, v: &RVec) -> f64 {
        self.a.dot(v) + self.b
    }

    fn extend(&self, extra: &[f64]) -> Aff {
        let mut a = RVec::zeros(self.a.len() + extra.len());
        a.rows_mut(0, self.a.len()).copy_from(&self.a);
        for (i, e) in extra.iter().enumerate() {
            a[self.a.len() + i] = *e;
        }
        Aff { a, b: self.b }
    }
}

/// Original variables as `x = x0 + N z`.
struct Elimination {
    x0: RVec,
    basis: RMat,
    free: Vec<usize>,
}

fn eliminate(problem: &ConicProblem) -> Result<Elimination, String> {
    let n = problem.num_vars();
    let m = problem.equalities.len();
    let mut a = RMat::zeros(m, n);
    let mut rhs = RVec::zeros(m);
    for (r, eq) in problem.equalities.iter().enumerate() {
        for (v, c) in &eq.item.terms {
            a[(r, v.0)] += c;
        }
        rhs[r] = -eq.item.constant;
    }
    let scale = a.amax().max(1.0);
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut is_pivot = vec![false; n];
    for r in 0..m {
        let mut best = (0.0, usize::MAX);
        for c in 0..n {
            if !is_pivot[c] && a[(r, c)].abs() > best.0 {
                best = (a[(r, c)].abs(), c);
            }
        }
        if best.0 <= 1e-12 * scale {
            if rhs[r].abs() > 1e-9 * scale.max(rhs.amax()) {
                return Err(alloc::format!("inconsistent equality '{}'", problem.equalities[r].label));
            }
            continue;
        }
        let c = best.1;
        let p = a[(r, c)];
        for j in 0..n {
            a[(r, j)] /= p;
        }
        rhs[r] /= p;
        for r2 in 0..m {
            if r2 != r && a[(r2, c)] != 0.0 {
                let f = a[(r2, c)];
                for j in 0..n {
                    let d = a[(r, j)];
                    if d != 0.0 {
                        a[(r2, j)] -= f * d;
                    }
                }
                rhs[r2] -= f * rhs[r];
            }
        }
        is_pivot[c] = true;
        pivots.push((r, c));
    }
    let free: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
    let mut basis = RMat::zeros(n, free.len());
    let mut x0 = RVec::zeros(n);
    for (j, &c) in free.iter().enumerate() {
        basis[(c, j)] = 1.0;
    }
    for &(r, c) in &pivots {
        x0[c] = rhs[r];
        for (j, &f) in free.iter().enumerate() {
            basis[(c, j)] = -a[(r, f)];
        }
    }
    Ok(Elimination { x0, basis, free })
}

impl Elimination {
    fn map(&self, e: &Affine) -> Aff {
        let mut a = RVec::zeros(self.basis.ncols());
        let mut b = e.constant;
        for (v, c) in &e.terms {
            b += c * self.x0[v.0];
            a.axpy(*c, &self.basis.row(v.0).transpose(), 1.0);
        }
        Aff { a, b }
    }

    fn lift(&self, z: &RVec) -> RVec {
        &self.x0 + &self.basis * z
    }
}

struct Soc {
    rows: Vec<Aff>,
    bound: Aff,
    label: usize,
}

struct Lmi {
    constant: RMat,
    terms: Vec<(usize, RMat)>,
    label: usize,
}

/// `tau <= ln y`.
struct LogCone {
    y: Aff,
    tau: Aff,
    label: usize,
}

struct Barrier {
    nv: usize,
    c: RVec,
    lin: Vec<Aff>,
    lin_labels: Vec<usize>,
    socs: Vec<Soc>,
    lmis: Vec<Lmi>,
    logs: Vec<LogCone>,
}

impl Barrier {
    fn nu(&self) -> f64 {
        (self.lin.len() + 2 * self.socs.len() + 2 * self.logs.len()) as f64
            + self.lmis.iter().map(|l| l.constant.nrows() as f64).sum::<f64>()
    }

    fn lmi_matrix(l: &Lmi, v: &RVec) -> RMat {
        let mut m = l.constant.clone();
        for (i, f) in &l.terms {
            if v[*i] != 0.0 {
                add_scaled(&mut m, v[*i], f);
            }
        }
        m
    }

    /// Barrier value, `None` outside the domain.
    fn value(&self, v: &RVec) -> Option<f64> {
        let mut phi = 0.0;
        for g in &self.lin {
            let x = g.eval(v);
            if !(x > 0.0) {
                return None;
            }
            phi -= x.ln();
        }
        for s in &self.socs {
            let t = s.bound.eval(v);
            let u2: f64 = s.rows.iter().map(|r| r.eval(v).powi(2)).sum();
            let d = t * t - u2;
            if !(t > 0.0 && d > 0.0) {
                return None;
            }
            phi -= d.ln();
        }
        for l in &self.lmis {
            let chol = Cholesky::new(Self::lmi_matrix(l, v))?;
            let diag = chol.l_dirty().diagonal();
            phi -= 2.0 * diag.iter().map(|d| d.ln()).sum::<f64>();
        }
        for c in &self.logs {
            let y = c.y.eval(v);
            if !(y > 0.0) {
                return None;
            }
            let r = y.ln() - c.tau.eval(v);
            if !(r > 0.0) {
                return None;
            }
            phi -= r.ln() + y.ln();
        }
        if phi.is_finite() {
            Some(phi)
        } else {
            None
        }
    }

    fn grad_hess(&self, v: &RVec) -> Option<(RVec, RMat)> {
        let n = self.nv;
        let mut g = RVec::zeros(n);
        let mut h = RMat::zeros(n, n);
        if !self.lin.is_empty() {
            let mut scaled = RMat::zeros(self.lin.len(), n);
            for (r, a) in self.lin.iter().enumerate() {
                let x = a.eval(v);
                g.axpy(-1.0 / x, &a.a, 1.0);
                scaled.row_mut(r).copy_from(&(a.a.transpose() / x));
            }
            h += scaled.transpose() * &scaled;
        }
        for s in &self.socs {
            let t = s.bound.eval(v);
            let u: Vec<f64> = s.rows.iter().map(|r| r.eval(v)).collect();
            let d = t * t - u.iter().map(|x| x * x).sum::<f64>();
            // grad D = 2 t f - 2 sum u_i d_i, hess D = 2 f f^T - 2 sum d_i d_i^T
            let mut gd = &s.bound.a * (2.0 * t);
            for (ui, r) in u.iter().zip(&s.rows) {
                gd.axpy(-2.0 * ui, &r.a, 1.0);
            }
            g.axpy(-1.0 / d, &gd, 1.0);
            h.ger(1.0 / (d * d), &gd, &gd, 1.0);
            h.ger(-2.0 / d, &s.bound.a, &s.bound.a, 1.0);
            for r in &s.rows {
                h.ger(2.0 / d, &r.a, &r.a, 1.0);
            }
        }
        for l in &self.lmis {
            let chol = Cholesky::new(Self::lmi_matrix(l, v))?;
            let lower = chol.l();
            let gs: Vec<(usize, RMat)> = l
                .terms
                .iter()
                .map(|(i, f)| {
                    let x = lower.solve_lower_triangular(f).expect("nonsingular factor");
                    let y = lower.solve_lower_triangular(&x.transpose()).expect("nonsingular factor");
                    (*i, y)
                })
                .collect();
            for (a, (i, gi)) in gs.iter().enumerate() {
                g[*i] -= gi.trace();
                for (j, gj) in gs[a..].iter() {
                    let val = gi.dot(gj);
                    h[(*i, *j)] += val;
                    if i != j {
                        h[(*j, *i)] += val;
                    }
                }
            }
        }
        for c in &self.logs {
            let y = c.y.eval(v);
            let r = y.ln() - c.tau.eval(v);
            // r = ln y - tau, phi = -ln r - ln y
            let mut dr = &c.y.a / y;
            dr -= &c.tau.a;
            g.axpy(-1.0 / r, &dr, 1.0);
            g.axpy(-1.0 / y, &c.y.a, 1.0);
            h.ger(1.0 / (r * r), &dr, &dr, 1.0);
            h.ger(1.0 / (y * y * r) + 1.0 / (y * y), &c.y.a, &c.y.a, 1.0);
        }
        if g.iter().all(|x| x.is_finite()) && h.iter().all(|x| x.is_finite()) {
            Some((g, h))
        } else {
            None
        }
    }

    /// Per-constraint slack (label, margin); negative when violated.
    fn margins(&self, v: &RVec) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for (g, l) in self.lin.iter().zip(&self.lin_labels) {
            out.push((*l, g.eval(v)));
        }
        for s in &self.socs {
            let u2: f64 = s.rows.iter().map(|r| r.eval(v).powi(2)).sum();
            out.push((s.label, s.bound.eval(v) - u2.sqrt()));
        }
        for l in &self.lmis {
            out.push((l.label, crate::linalg::min_eigenvalue(&Self::lmi_matrix(l, v))));
        }
        for c in &self.logs {
            let y = c.y.eval(v);
            let m = if y > 0.0 { (y.ln() - c.tau.eval(v)).min(y) } else { y };
            out.push((c.label, m));
        }
        out
    }
}

enum CenterError {
    Budget,
    Stall,
    Numerical,
}

fn solve_newton(h: &RMat, rhs: &RVec) -> Option<RVec> {
    if let Some(ch) = Cholesky::new(h.clone()) {
        return Some(ch.solve(rhs));
    }
    let scale = (0..h.nrows()).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut reg = 1e-14 * scale;
    for _ in 0..8 {
        let mut hr = h.clone();
        for i in 0..hr.nrows() {
            hr[(i, i)] += reg;
        }
        if let Some(ch) = Cholesky::new(hr) {
            return Some(ch.solve(rhs));
        }
        reg *= 100.0;
    }
    None
}

/// Newton steps allowed for one centering before it counts as stalled.
const CENTER_STEPS: usize = 150;

/// Minimize `-t c^T v + phi(v)` from a strictly feasible `v`. `stop` may end early.
fn center(
    b: &Barrier,
    v: &mut RVec,
    t: f64,
    budget: &mut usize,
    steps: &mut usize,
    stop: &dyn Fn(&RVec) -> bool,
) -> Result<(), CenterError> {
    let obj = |v: &RVec, phi: f64| -t * b.c.dot(v) + phi;
    let mut f0 = obj(v, b.value(v).ok_or(CenterError::Numerical)?);
    loop {
        if *budget == 0 {
            return Err(CenterError::Budget);
        }
        let (g, h) = b.grad_hess(v).ok_or(CenterError::Numerical)?;
        let gt = g - &b.c * t;
        let d = solve_newton(&h, &(-&gt)).ok_or(CenterError::Numerical)?;
        let slope = gt.dot(&d);
        let lambda2 = -slope;
        if !lambda2.is_finite() {
            return Err(CenterError::Numerical);
        }
        if lambda2 / 2.0 <= 1e-10 {
            return Ok(());
        }
        let mut alpha = 1.0;
        loop {
            let trial = &*v + &d * alpha;
            if let Some(phi) = b.value(&trial) {
                let f = obj(&trial, phi);
                if f <= f0 + 0.01 * alpha * slope {
                    *v = trial;
                    f0 = f;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-12 || (alpha < 1e-3 && lambda2 < 1e-6) {
                // Below this decrement the decrease is lost in the rounding of f.
                return if lambda2 < 1e-6 { Ok(()) } else { Err(CenterError::Stall) };
            }
        }
        *budget -= 1;
        *steps += 1;


        if stop(v) || (lambda2 < 1e-6 && alpha < 1.0) {
            return Ok(());
        }
    }
}

/// Everything expressed over the eliminated coordinates `z`.
struct Reduced {
    nz: usize,
    labels: Vec<String>,
    lin: Vec<(Aff, usize)>,
    socs: Vec<(Vec<Aff>, Aff, usize)>,
    lmis: Vec<(RMat, Vec<(usize, RMat)>, usize)>,
    /// Hypographs: linear part, weighted log arguments, label.
    hypos: Vec<(Aff, Vec<(f64, Aff)>, usize)>,
    obj_lin: Aff,
    obj_logs: Vec<(f64, Aff)>,
}

fn reduce(problem: &ConicProblem, elim: &Elimination) -> Reduced {
    let nz = elim.basis.ncols();
    let mut labels: Vec<String> = Vec::new();
    let mut label = |s: &str| -> usize {
        if let Some(i) = labels.iter().position(|l| l == s) {
            i
        } else {
            labels.push(s.into());
            labels.len() - 1
        }
    };
    let mut lin = Vec::new();
    for i in 0..problem.num_vars() {
        let v = super::Var(i);
        let id = label(&alloc::format!("bounds of {}", problem.names[i]));
        if let Some(lo) = problem.lower[i] {
            lin.push((elim.map(&Affine::var(v).plus_constant(-lo)), id));
        }
        if let Some(hi) = problem.upper[i] {
            lin.push((elim.map(&Affine::term(v, -1.0).plus_constant(hi)), id));
        }
    }
    // Bounds on variables fully determined by equalities are constants; drop them if met.
    lin.retain(|(a, _)| a.a.amax() > 0.0 || a.b < 0.0);
    for ineq in &problem.inequalities {
        let id = label(&ineq.label);
        lin.push((elim.map(&ineq.item), id));
    }
    let socs = problem
        .cones
        .iter()
        .map(|c| (c.rows.iter().map(|r| elim.map(r)).collect(), elim.map(&c.bound), label(&c.label)))
        .collect();
    let lmis = problem
        .lmis
        .iter()
        .map(|l| {
            let mut constant = l.constant.clone();
            let mut coeffs: Vec<RMat> = vec![RMat::zeros(0, 0); nz];
            for (v, f) in &l.terms {
                let x0 = elim.x0[v.0];
                if x0 != 0.0 {
                    add_scaled(&mut constant, x0, f);
                }
                for j in 0..nz {
                    let nij = elim.basis[(v.0, j)];
                    if nij != 0.0 {
                        if coeffs[j].nrows() == 0 {
                            coeffs[j] = f * nij;
                        } else {
                            add_scaled(&mut coeffs[j], nij, f);
                        }
                    }
                }
            }
            let terms = coeffs.into_iter().enumerate().filter(|(_, m)| m.nrows() > 0 && m.amax() > 0.0).collect();
            (constant, terms, label(&l.label))
        })
        .collect();
    let map_concave = |e: &ConcaveExpr| -> (Aff, Vec<(f64, Aff)>) {
        (elim.map(&e.linear), e.logs.iter().map(|(w, a)| (*w, elim.map(a))).collect())
    };
    let hypos = problem
        .hypographs
        .iter()
        .map(|h| {
            let (l, logs) = map_concave(&h.item);
            (l, logs, label(&h.label))
        })
        .collect();
    let (obj_lin, obj_logs) = map_concave(&problem.objective);
    Reduced { nz, labels, lin, socs, lmis, hypos, obj_lin, obj_logs }
}

/// Working variables: `[z, hypograph taus, objective taus]` in the optimization phase,
/// `[z, hypograph taus, s]` in the feasibility phase.
fn assemble(r: &Reduced, feasibility: bool) -> Barrier {
    let n_hyp: usize = r.hypos.iter().map(|h| h.1.len()).sum();
    let n_obj = if feasibility { 0 } else { r.obj_logs.len() };
    let nv = r.nz + n_hyp + n_obj + usize::from(feasibility);
    let s_idx = nv - 1;
    let widen = |a: &Aff| -> Aff { a.extend(&vec![0.0; nv - r.nz]) };
    let unit = |i: usize| -> RVec {
        let mut e = RVec::zeros(nv);
        e[i] = 1.0;
        e
    };
    let relax = |mut a: Aff, by: f64| -> Aff {
        if feasibility {
            a.a[s_idx] += by;
        }
        a
    };
    let mut lin = Vec::new();
    let mut lin_labels = Vec::new();
    for (a, l) in &r.lin {
        lin.push(relax(widen(a), 1.0));
        lin_labels.push(*l);
    }
    let socs = r
        .socs
        .iter()
        .map(|(rows, bound, l)| Soc { rows: rows.iter().map(widen).collect(), bound: relax(widen(bound), 1.0), label: *l })
        .collect();
    let lmis = r
        .lmis
        .iter()
        .map(|(c, terms, l)| {
            let mut terms = terms.clone();
            if feasibility {
                terms.push((s_idx, RMat::identity(c.nrows(), c.nrows())));
            }
            Lmi { constant: c.clone(), terms, label: *l }
        })
        .collect();
    let mut logs = Vec::new();
    let mut tau = r.nz;
    for (linear, args, l) in &r.hypos {
        let mut row = relax(widen(linear), 1.0);
        for (w, a) in args {
            row.a[tau] += w;
            let t = Aff { a: unit(tau), b: 0.0 };
            logs.push(LogCone { y: relax(widen(a), 1.0), tau: relax(t, -1.0), label: *l });
            tau += 1;
        }
        lin.push(row);
        lin_labels.push(*l);
    }
    let mut c = RVec::zeros(nv);
    let obj_label = r.labels.len();
    if feasibility {
        c[s_idx] = -1.0;
        lin.push(Aff { a: unit(s_idx), b: 1.0 });
        lin_labels.push(obj_label);
        for (_, a) in &r.obj_logs {
            lin.push(relax(widen(a), 1.0));
            lin_labels.push(obj_label);
        }
    } else {
        c.rows_mut(0, r.nz).copy_from(&r.obj_lin.a);
        for (w, a) in &r.obj_logs {
            c[tau] = *w;
            logs.push(LogCone { y: widen(a), tau: Aff { a: unit(tau), b: 0.0 }, label: obj_label });
            tau += 1;
        }
    }
    Barrier { nv, c, lin, lin_labels, socs, lmis, logs }
}

/// Solve `problem`; `start` optionally proposes original-variable values to warm-start
/// the feasibility search.
pub fn solve_conic(problem: &ConicProblem, tol: &Tolerances) -> Solution {
    solve_conic_from(problem, tol, None)
}

pub fn solve_conic_from(problem: &ConicProblem, tol: &Tolerances, start: Option<&[f64]>) -> Solution {
    let n = problem.num_vars();
    if let Err(e) = problem.validate() {
        return Solution::failure(SolveStatus::NumericalFailure, n, alloc::format!("{e}"));
    }
    let elim = match eliminate(problem) {
        Ok(e) => e,
        Err(msg) => {
            let mut s = Solution::failure(SolveStatus::Infeasible, n, msg);
            s.binding = vec!["equalities".into()];
            return s;
        }
    };
    let red = reduce(problem, &elim);
    let nz = red.nz;
    let mut z = RVec::zeros(nz);
    if let Some(x) = start {
        for (j, &f) in elim.free.iter().enumerate() {
            z[j] = x[f];
        }
    }
    let mut budget = tol.max_newton;
    let mut steps = 0usize;
    let n_hyp: usize = red.hypos.iter().map(|h| h.1.len()).sum();

    // Hypograph taus start just below their log arguments.
    let mut tau_hyp = Vec::with_capacity(n_hyp);
    for (_, args, _) in &red.hypos {
        for (_, a) in args {
            let y = a.a.dot(&z) + a.b;
            tau_hyp.push(if y > 0.0 { y.ln() - 0.5 } else { 0.0 });
        }
    }

    let opt = assemble(&red, false);
    let mut v = RVec::zeros(opt.nv);
    v.rows_mut(0, nz).copy_from(&z);
    for (i, t) in tau_hyp.iter().enumerate() {
        v[nz + i] = *t;
    }
    let mut tau = nz + n_hyp;
    for (_, a) in &red.obj_logs {
        let y = a.a.dot(&z) + a.b;
        v[tau] = if y > 0.0 { y.ln() - 1.0 } else { 0.0 };
        tau += 1;
    }

    if opt.value(&v).is_none() {
        let feas = assemble(&red, true);
        let s_idx = feas.nv - 1;
        let mut u = RVec::zeros(feas.nv);
        u.rows_mut(0, nz + n_hyp).copy_from(&v.rows(0, nz + n_hyp));
        let worst = feas_worst_margin(&feas, &u, s_idx);
        // Relax just enough to enter the domain, so a nearly feasible start stays close.
        let mut s0 = 2.0 * (-worst).max(0.0) + 1e-9;
        u[s_idx] = s0;
        while feas.value(&u).is_none() {
            s0 *= 2.0;
            u[s_idx] = s0;
            if !s0.is_finite() || s0 > 1e30 {
                return Solution::failure(SolveStatus::NumericalFailure, n, "no interior start for feasibility phase");
            }
        }
        let nu = feas.nu();
        let mut t = (1.0 / s0).max(1.0);
        loop {
            let r = center(&feas, &mut u, t, &mut budget, &mut steps, &|u: &RVec| u[s_idx] < 0.0);
            let s = u[s_idx];
            if s < 0.0 {
                break;
            }
            let infeasible = match r {
                Ok(()) => s - nu / t > 0.0 || nu / t < 1e-11,
                Err(CenterError::Stall) => s > 0.0 && nu / t < 1e-6,
                Err(CenterError::Budget) => {
                    return Solution::failure(SolveStatus::NumericalFailure, n, "iteration budget exhausted in feasibility phase")
                }
                Err(CenterError::Numerical) => {
                    return Solution::failure(SolveStatus::NumericalFailure, n, "numerical breakdown in feasibility phase")
                }
            };
            if infeasible {
                let mut sol = Solution::failure(SolveStatus::Infeasible, n, alloc::format!("minimal relaxation {s:.3e}"));
                sol.binding = binding_labels(&feas, &red.labels, &u, s_idx);
                sol.newton_steps = steps;
                return sol;
            }
            t *= tol.mu;
        }
        v.rows_mut(0, nz + n_hyp).copy_from(&u.rows(0, nz + n_hyp));
        let mut tau = nz + n_hyp;
        for (_, a) in &red.obj_logs {
            let y = a.a.dot(&v.rows(0, nz).into_owned()) + a.b;
            v[tau] = y.ln() - 1.0;
            tau += 1;
        }
        if opt.value(&v).is_none() {
            return Solution::failure(SolveStatus::NumericalFailure, n, "feasibility phase ended outside the domain");
        }
    }

    let nu = opt.nu();
    let mut t = 1.0;
    let mut message = String::new();
    // Last centered iterate and its certified gap.
    let mut centered: Option<(RVec, f64)> = None;
    loop {
        let mut local = budget.min(CENTER_STEPS);
        let before = local;
        let r = center(&opt, &mut v, t, &mut local, &mut steps, &|_| false);
        budget -= before - local;
        let stalled = match r {
            Err(CenterError::Stall) => true,
            Err(CenterError::Budget) => budget > 0,
            _ => false,
        };
        match r {
            Ok(()) => {}
            _ if stalled && centered.as_ref().is_some_and(|c| c.1 <= tol.stall_gap) => {
                let (prev, gap) = centered.take().expect("checked above");
                v = prev;
                t = nu / gap;
                message = alloc::format!("stalled at gap {gap:.2e}");
                break;
            }
            Err(e) => {
                let why = match e {
                    CenterError::Budget if budget > 0 => "centering step limit reached",
                    CenterError::Budget => "iteration budget exhausted",
                    CenterError::Stall => "line search stalled",
                    CenterError::Numerical => "numerical breakdown",
                };
                let mut sol = Solution::failure(SolveStatus::NumericalFailure, n, why);
                sol.newton_steps = steps;
                sol.x = elim.lift(&v.rows(0, nz).into_owned()).iter().copied().collect();
                return sol;
            }
        }
        if nu / t <= tol.gap {
            break;
        }
        centered = Some((v.clone(), nu / t));
        t *= tol.mu;
    }
    let x: Vec<f64> = elim.lift(&v.rows(0, nz).into_owned()).iter().copied().collect();
    finish(problem, tol, x, nu / t, steps, message)
}

fn feas_worst_margin(b: &Barrier, u: &RVec, s_idx: usize) -> f64 {
    let mut probe = u.clone();
    probe[s_idx] = 0.0;
    b.margins(&probe).iter().map(|m| m.1).fold(f64::INFINITY, f64::min)
}

fn binding_labels(b: &Barrier, labels: &[String], u: &RVec, s_idx: usize) -> Vec<String> {
    let mut probe = u.clone();
    probe[s_idx] = 0.0;
    let margins = b.margins(&probe);
    let worst = margins.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    let mut out: Vec<String> = Vec::new();
    for (l, m) in margins {
        if m <= 0.5 * worst && l < labels.len() && !out.contains(&labels[l]) {
            out.push(labels[l].clone());
        }
    }
    out
}

fn finish(problem: &ConicProblem, tol: &Tolerances, x: Vec<f64>, gap: f64, steps: usize, message: String) -> Solution {
    let eq_res = problem.equalities.iter().map(|e| e.item.eval(&x).abs()).fold(0.0, f64::max);
    let min_eig = problem.lmis.iter().map(|l| l.min_eigenvalue(&x)).fold(f64::INFINITY, f64::min);
    let min_ineq = problem.inequalities.iter().map(|e| e.item.eval(&x)).fold(f64::INFINITY, f64::min);
    let mut status = SolveStatus::Optimal;
    let mut message = message;
    if eq_res > tol.feasibility || min_eig < -tol.feasibility || min_ineq < -tol.feasibility {
        status = SolveStatus::NumericalFailure;
        message = alloc::format!("returned point violates constraints (eq {eq_res:.2e}, eig {min_eig:.2e}, ineq {min_ineq:.2e})");
    }
    let objective = problem.objective.eval(&x);
    Solution {
        status,
        x,
        objective,
        gap,
        newton_steps: steps,
        min_psd_eigenvalue: min_eig,
        equality_residual: eq_res,
        binding: Vec::new(),
        message,
    }
}
