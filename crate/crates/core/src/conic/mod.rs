//! Real-embedded conic programs with concave-log objectives.
//!
//! A [`ConicProblem`] maximizes `c^T x + sum_k alpha_k log(a_k^T x + b_k)` subject to
//! linear equalities and inequalities, second-order cones, real symmetric LMIs and
//! hypograph constraints of the same concave form. Complex Hermitian LMIs are built with
//! [`CAffine`] entries and embedded with [`complex_to_real_embedding`].

mod barrier;
mod expr;
mod lmi;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;


pub use barrier::{solve_conic, solve_conic_from, Solution, SolveStatus, Tolerances};
pub use expr::{Affine, CAffine, Var};
pub use lmi::{
    complex_to_real_embedding, linearized_square, reduce_bordered, s_procedure_lmi, sign_definiteness_lmi, Ball,
    HermitianLmi, LmiBlock, QuadraticForm,
};

/// `linear + sum weight * ln(argument)` with positive weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConcaveExpr {
    pub linear: Affine,
    pub logs: Vec<(f64, Affine)>,
}

impl ConcaveExpr {
    pub fn linear(a: Affine) -> Self {
        Self { linear: a, logs: Vec::new() }
    }

    pub fn with_log(mut self, weight: f64, argument: Affine) -> Self {
        self.logs.push((weight, argument));
        self
    }

    /// Value at `x`, `-inf` outside the log domains.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.linear.eval(x);
        for (w, a) in &self.logs {
            let y = a.eval(x);
            if y <= 0.0 {
                return f64::NEG_INFINITY;
            }
            v += w * y.ln();
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderCone {
    /// `|| rows || <= bound`.
    pub rows: Vec<Affine>,
    pub bound: Affine,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Labeled<T> {
    pub item: T,
    pub label: String,
}

/// Variables, objective and constraint blocks of one convex program.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConicProblem {
    pub names: Vec<String>,
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
    /// Maximized.
    pub objective: ConcaveExpr,
    /// `expr = 0`.
    pub equalities: Vec<Labeled<Affine>>,
    /// `expr >= 0`.
    pub inequalities: Vec<Labeled<Affine>>,
    pub cones: Vec<SecondOrderCone>,
    pub lmis: Vec<LmiBlock>,
    /// `expr >= 0` for concave `expr`.
    pub hypographs: Vec<Labeled<ConcaveExpr>>,
}

impl ConicProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: Option<f64>, upper: Option<f64>) -> Var {
        self.names.push(name.into());
        self.lower.push(lower);
        self.upper.push(upper);
        Var(self.names.len() - 1)
    }

    /// Real and imaginary parts of a complex decision, both boxed to `[-bound, bound]`.
    pub fn add_complex_var(&mut self, name: &str, bound: f64) -> (Var, Var) {
        let re = self.add_var(alloc::format!("{name}.re"), Some(-bound), Some(bound));
        let im = self.add_var(alloc::format!("{name}.im"), Some(-bound), Some(bound));
        (re, im)
    }

    pub fn set_objective(&mut self, objective: ConcaveExpr) {
        self.objective = objective;
    }

    pub fn add_equality(&mut self, expr: Affine, label: &str) {
        self.equalities.push(Labeled { item: expr, label: label.into() });
    }

    pub fn add_inequality(&mut self, expr: Affine, label: &str) {
        self.inequalities.push(Labeled { item: expr, label: label.into() });
    }

    pub fn add_cone(&mut self, rows: Vec<Affine>, bound: Affine, label: &str) {
        self.cones.push(SecondOrderCone { rows, bound, label: label.into() });
    }

    pub fn add_lmi(&mut self, block: LmiBlock) {
        self.lmis.push(block);
    }

    /// Embed a Hermitian LMI and add it.
    pub fn add_hermitian_lmi(&mut self, lmi: &HermitianLmi) -> crate::Result<()> {
        let block = lmi.embed()?;
        self.lmis.push(block);
        Ok(())
    }

    pub fn add_hypograph(&mut self, expr: ConcaveExpr, label: &str) {
        self.hypographs.push(Labeled { item: expr, label: label.into() });
    }

    /// Check that every referenced variable exists and every LMI is symmetric.
    pub fn validate(&self) -> crate::Result<()> {
        let n = self.num_vars();
        let bad = |a: &Affine| a.terms.iter().any(|(v, _)| v.0 >= n);
        let mut refs: Vec<&Affine> = Vec::new();
        refs.push(&self.objective.linear);
        refs.extend(self.objective.logs.iter().map(|(_, a)| a));
        refs.extend(self.equalities.iter().map(|l| &l.item));
        refs.extend(self.inequalities.iter().map(|l| &l.item));
        for c in &self.cones {
            refs.extend(c.rows.iter());
            refs.push(&c.bound);
        }
        for h in &self.hypographs {
            refs.push(&h.item.linear);
            refs.extend(h.item.logs.iter().map(|(_, a)| a));
        }
        if refs.into_iter().any(bad) || self.lmis.iter().any(|l| l.terms.iter().any(|(v, _)| v.0 >= n)) {
            return Err(crate::Error::Dimension("expression references an undeclared variable".into()));
        }
        for l in &self.lmis {
            l.check_symmetric()?;
        }
        if self.objective.logs.iter().chain(self.hypographs.iter().flat_map(|h| h.item.logs.iter())).any(|(w, _)| !(*w > 0.0))
        {
            return Err(crate::Error::InvalidParameter("log weights must be positive".into()));
        }
        Ok(())
    }

    /// Plain-text summary of dimensions and blocks.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "variables: {}", self.num_vars());
        for (i, name) in self.names.iter().enumerate() {
            let _ = writeln!(s, "  x{i} {name} in [{:?}, {:?}]", self.lower[i], self.upper[i]);
        }
        let _ = writeln!(
            s,
            "objective: {} linear terms, {} log terms",
            self.objective.linear.terms.len(),
            self.objective.logs.len()
        );
        let _ = writeln!(s, "equalities: {}", self.equalities.len());
        let _ = writeln!(s, "inequalities: {}", self.inequalities.len());
        for c in &self.cones {
            let _ = writeln!(s, "soc {} dim {}", c.label, c.rows.len() + 1);
        }
        for l in &self.lmis {
            let nnz: usize = l.terms.iter().map(|(_, m)| m.iter().filter(|v| **v != 0.0).count()).sum();
            let _ = writeln!(s, "lmi {} dim {} vars {} nnz {}", l.label, l.dim(), l.terms.len(), nnz);
        }
        for h in &self.hypographs {
            let _ = writeln!(s, "hypograph {} logs {}", h.label, h.item.logs.len());
        }
        s
    }
}
