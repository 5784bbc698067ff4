use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

/// Index of a real decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub usize);

/// Real affine expression `constant + sum coef * x_var`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Affine {
    pub constant: f64,
    pub terms: Vec<(Var, f64)>,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, terms: Vec::new() }
    }

    pub fn var(v: Var) -> Self {
        Self { constant: 0.0, terms: alloc::vec![(v, 1.0)] }
    }

    pub fn term(v: Var, coef: f64) -> Self {
        Self { constant: 0.0, terms: alloc::vec![(v, coef)] }
    }

    pub fn plus_term(mut self, v: Var, coef: f64) -> Self {
        self.terms.push((v, coef));
        self
    }

    pub fn plus_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().fold(self.constant, |acc, (v, c)| acc + c * x[v.0])
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.constant *= s;
        self.terms.iter_mut().for_each(|(_, c)| *c *= s);
        self
    }

    /// Merge repeated variables and drop zero coefficients.
    pub fn compact(mut self) -> Self {
        self.terms.sort_by_key(|(v, _)| *v);
        let mut out: Vec<(Var, f64)> = Vec::with_capacity(self.terms.len());
        for (v, c) in self.terms {
            match out.last_mut() {
                Some((lv, lc)) if *lv == v => *lc += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|(_, c)| *c != 0.0);
        self.terms = out;
        self
    }
}

impl Add for Affine {
    type Output = Affine;
    fn add(mut self, rhs: Affine) -> Affine {
        self.constant += rhs.constant;
        self.terms.extend(rhs.terms);
        self
    }
}

impl Sub for Affine {
    type Output = Affine;
    fn sub(self, rhs: Affine) -> Affine {
        self + rhs.scale(-1.0)
    }
}

impl Neg for Affine {
    type Output = Affine;
    fn neg(self) -> Affine {
        self.scale(-1.0)
    }
}

/// Complex-valued affine expression of real decisions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CAffine {
    pub constant: Complex64,
    pub terms: Vec<(Var, Complex64)>,
}

impl CAffine {
    pub fn constant(c: Complex64) -> Self {
        Self { constant: c, terms: Vec::new() }
    }

    pub fn real(v: Var) -> Self {
        Self { constant: Complex64::new(0.0, 0.0), terms: alloc::vec![(v, Complex64::new(1.0, 0.0))] }
    }

    /// `re + j im` for a complex decision stored as two real variables.
    pub fn complex(re: Var, im: Var) -> Self {
        Self {
            constant: Complex64::new(0.0, 0.0),
            terms: alloc::vec![(re, Complex64::new(1.0, 0.0)), (im, Complex64::new(0.0, 1.0))],
        }
    }

    pub fn from_affine(a: &Affine) -> Self {
        Self {
            constant: Complex64::new(a.constant, 0.0),
            terms: a.terms.iter().map(|(v, c)| (*v, Complex64::new(*c, 0.0))).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self { constant: self.constant.conj(), terms: self.terms.iter().map(|(v, c)| (*v, c.conj())).collect() }
    }

    pub fn re(&self) -> Affine {
        Affine { constant: self.constant.re, terms: self.terms.iter().map(|(v, c)| (*v, c.re)).collect() }
    }

    pub fn im(&self) -> Affine {
        Affine { constant: self.constant.im, terms: self.terms.iter().map(|(v, c)| (*v, c.im)).collect() }
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.terms.iter().fold(self.constant, |acc, (v, c)| acc + c * x[v.0])
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|(_, c)| *c == Complex64::new(0.0, 0.0))
    }

    pub fn compact(mut self) -> Self {
        self.terms.sort_by_key(|(v, _)| *v);
        let mut out: Vec<(Var, Complex64)> = Vec::with_capacity(self.terms.len());
        for (v, c) in self.terms {
            match out.last_mut() {
                Some((lv, lc)) if *lv == v => *lc += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|(_, c)| *c != Complex64::new(0.0, 0.0));
        self.terms = out;
        self
    }
}

impl Add for CAffine {
    type Output = CAffine;
    fn add(mut self, rhs: CAffine) -> CAffine {
        self.constant += rhs.constant;
        self.terms.extend(rhs.terms);
        self
    }
}

impl AddAssign for CAffine {
    fn add_assign(&mut self, rhs: CAffine) {
        self.constant += rhs.constant;
        self.terms.extend(rhs.terms);
    }
}

impl Sub for CAffine {
    type Output = CAffine;
    fn sub(self, rhs: CAffine) -> CAffine {
        self + rhs * Complex64::new(-1.0, 0.0)
    }
}

impl Mul<Complex64> for CAffine {
    type Output = CAffine;
    fn mul(mut self, s: Complex64) -> CAffine {
        self.constant *= s;
        self.terms.iter_mut().for_each(|(_, c)| *c *= s);
        self
    }
}

impl Mul<Complex64> for &CAffine {
    type Output = CAffine;
    fn mul(self, s: Complex64) -> CAffine {
        self.clone() * s
    }
}
