use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use num_complex::Complex64;

use super::expr::{Affine, CAffine, Var};
use crate::linalg::{hermitian_deviation, min_eigenvalue, CMat, CVec, RMat};
use crate::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-9;
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `[[Re H, -Im H], [Im H, Re H]]`; PSD exactly when `H` is.
pub fn complex_to_real_embedding(h: &CMat) -> Result<RMat> {
    if h.nrows() != h.ncols() {
        return Err(Error::Dimension(format!("embedding needs a square matrix, got {}x{}", h.nrows(), h.ncols())));
    }
    let dev = hermitian_deviation(h);
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    Ok(embed_unchecked(h))
}

fn embed_unchecked(h: &CMat) -> RMat {
    let n = h.nrows();
    let mut out = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            // Symmetrize so round-off never breaks exact symmetry.
            let z = 0.5 * (h[(i, j)] + h[(j, i)].conj());
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    out
}

/// Real symmetric matrix affine in the decisions: `constant + sum x_v F_v >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiBlock {
    pub constant: RMat,
    pub terms: Vec<(Var, RMat)>,
    pub label: String,
}

impl LmiBlock {
    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }

    pub fn eval(&self, x: &[f64]) -> RMat {
        let mut m = self.constant.clone();
        for (v, f) in &self.terms {
            m += f * x[v.0];
        }
        m
    }

    pub fn min_eigenvalue(&self, x: &[f64]) -> f64 {
        min_eigenvalue(&self.eval(x))
    }

    pub fn check_symmetric(&self) -> Result<()> {
        let n = self.dim();
        for m in core::iter::once(&self.constant).chain(self.terms.iter().map(|(_, f)| f)) {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Dimension(format!("{}: coefficient matrix has the wrong size", self.label)));
            }
            let scale = m.amax().max(1.0);
            if (m - m.transpose()).amax() > 1e-12 * scale {
                return Err(Error::InvalidParameter(format!("{}: coefficient matrix is not symmetric", self.label)));
            }
        }
        Ok(())
    }
}

/// Complex Hermitian matrix affine in real decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianLmi {
    pub constant: CMat,
    pub terms: Vec<(Var, CMat)>,
    pub label: String,
}

impl HermitianLmi {
    /// Collect coefficient matrices from an `n x n` table of affine entries.
    pub fn from_entries(n: usize, entry: impl Fn(usize, usize) -> CAffine, label: &str) -> Result<Self> {
        let mut constant = CMat::zeros(n, n);
        let mut terms: BTreeMap<Var, CMat> = BTreeMap::new();
        for i in 0..n {
            for j in 0..n {
                let e = entry(i, j);
                constant[(i, j)] += e.constant;
                for (v, c) in e.terms {
                    terms.entry(v).or_insert_with(|| CMat::zeros(n, n))[(i, j)] += c;
                }
            }
        }
        let lmi = Self { constant, terms: terms.into_iter().collect(), label: label.into() };
        lmi.check_hermitian()?;
        Ok(lmi)
    }

    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }

    pub fn eval(&self, x: &[f64]) -> CMat {
        let mut m = self.constant.clone();
        for (v, f) in &self.terms {
            m += f * Complex64::new(x[v.0], 0.0);
        }
        m
    }

    pub fn check_hermitian(&self) -> Result<()> {
        for m in core::iter::once(&self.constant).chain(self.terms.iter().map(|(_, f)| f)) {
            let dev = hermitian_deviation(m);
            if dev > HERMITIAN_TOL * m.camax().max(1.0) {
                return Err(Error::NotHermitian(dev));
            }
        }
        Ok(())
    }

    /// `T^H F(x) T`.
    pub fn congruence(&self, t: &CMat) -> Self {
        let th = t.adjoint();
        Self {
            constant: &th * &self.constant * t,
            terms: self.terms.iter().map(|(v, f)| (*v, &th * f * t)).collect(),
            label: self.label.clone(),
        }
    }

    /// Real symmetric embedding of every coefficient.
    pub fn embed(&self) -> Result<LmiBlock> {
        self.check_hermitian()?;
        Ok(LmiBlock {
            constant: embed_unchecked(&self.constant),
            terms: self
                .terms
                .iter()
                .filter(|(_, f)| f.iter().any(|z| *z != ZERO))
                .map(|(v, f)| (*v, embed_unchecked(f)))
                .collect(),
            label: self.label.clone(),
        })
    }
}

/// `x^H Q x + 2 Re(g^H x) + p`, affine in the decisions through `Q`, `g` and `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub q_constant: CMat,
    pub q_terms: Vec<(Var, CMat)>,
    pub g: Vec<CAffine>,
    pub p: Affine,
}

impl QuadraticForm {
    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn q(&self, y: &[f64]) -> CMat {
        let mut m = self.q_constant.clone();
        for (v, f) in &self.q_terms {
            m += f * Complex64::new(y[v.0], 0.0);
        }
        m
    }

    pub fn g(&self, y: &[f64]) -> CVec {
        CVec::from_iterator(self.g.len(), self.g.iter().map(|e| e.eval(y)))
    }

    /// Value at decision `y` and uncertainty `x`.
    pub fn eval(&self, y: &[f64], x: &CVec) -> f64 {
        let q = self.q(y);
        let g = self.g(y);
        x.dotc(&(q * x)).re + 2.0 * g.dotc(x).re + self.p.eval(y)
    }
}

/// Tangent lower bound of `|c(y) + beta(y)^T x|^2` around the point `(c0, beta0)`:
/// exact when `c(y) = c0` and `beta(y) = beta0`, below the true value elsewhere.
pub fn linearized_square(c0: Complex64, beta0: &CVec, c: &CAffine, beta: &[CAffine]) -> QuadraticForm {
    let n = beta0.len();
    assert_eq!(beta.len(), n, "beta dimension");
    let mut b_const = CVec::zeros(n);
    let mut b_terms: BTreeMap<Var, CVec> = BTreeMap::new();
    for (i, e) in beta.iter().enumerate() {
        b_const[i] += e.constant;
        for (v, coef) in &e.terms {
            b_terms.entry(*v).or_insert_with(|| CVec::zeros(n))[i] += coef;
        }
    }
    let cb0 = beta0.map(|z| z.conj());
    let outer = |b: &CVec| -> CMat { &cb0 * b.transpose() + b.map(|z| z.conj()) * beta0.transpose() };
    let q_constant = outer(&b_const) - &cb0 * beta0.transpose();
    let q_terms = b_terms.iter().map(|(v, b)| (*v, outer(b))).collect();
    let g = (0..n)
        .map(|i| (beta[i].conj() * c0 + c * cb0[i]).compact().plus_constant_c(-c0 * cb0[i]))
        .collect();
    let cc0 = c0.conj();
    let p = Affine {
        constant: 2.0 * (cc0 * c.constant).re - c0.norm_sqr(),
        terms: c.terms.iter().map(|(v, z)| (*v, 2.0 * (cc0 * z).re)).collect(),
    };
    QuadraticForm { q_constant, q_terms, g, p }
}

trait PlusConstant {
    fn plus_constant_c(self, c: Complex64) -> Self;
}

impl PlusConstant for CAffine {
    fn plus_constant_c(mut self, c: Complex64) -> Self {
        self.constant += c;
        self
    }
}

/// Uncertainty ball `|| x[block] ||^2 <= radius^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub block: Range<usize>,
    pub radius: f64,
}

/// Bordered LMI certifying `form >= 0` for every `x` in all balls:
/// `[[Q + sum w_k P_k, g], [g^H, p - sum w_k r_k^2]] >= 0` with one multiplier per ball.
/// The multipliers must be constrained nonnegative by the caller.
pub fn s_procedure_lmi(form: &QuadraticForm, balls: &[Ball], multipliers: &[Var], label: &str) -> Result<HermitianLmi> {
    let n = form.dim();
    if balls.len() != multipliers.len() {
        return Err(Error::Dimension(format!("{} balls but {} multipliers", balls.len(), multipliers.len())));
    }
    if form.q_constant.nrows() != n || form.q_terms.iter().any(|(_, m)| m.nrows() != n || m.ncols() != n) {
        return Err(Error::Dimension(format!("{label}: Q is not {n}x{n}")));
    }
    if balls.iter().any(|b| b.block.end > n) {
        return Err(Error::Dimension(format!("{label}: ball block exceeds dimension {n}")));
    }
    let mut terms: BTreeMap<Var, CMat> = BTreeMap::new();
    let mut constant = CMat::zeros(n + 1, n + 1);
    constant.view_mut((0, 0), (n, n)).copy_from(&form.q_constant);
    for (v, q) in &form.q_terms {
        terms.entry(*v).or_insert_with(|| CMat::zeros(n + 1, n + 1)).view_mut((0, 0), (n, n)).add_assign(q);
    }
    for (i, e) in form.g.iter().enumerate() {
        constant[(i, n)] += e.constant;
        constant[(n, i)] += e.constant.conj();
        for (v, c) in &e.terms {
            let m = terms.entry(*v).or_insert_with(|| CMat::zeros(n + 1, n + 1));
            m[(i, n)] += c;
            m[(n, i)] += c.conj();
        }
    }
    constant[(n, n)] += Complex64::new(form.p.constant, 0.0);
    for (v, c) in &form.p.terms {
        terms.entry(*v).or_insert_with(|| CMat::zeros(n + 1, n + 1))[(n, n)] += Complex64::new(*c, 0.0);
    }
    for (ball, w) in balls.iter().zip(multipliers) {
        let m = terms.entry(*w).or_insert_with(|| CMat::zeros(n + 1, n + 1));
        for i in ball.block.clone() {
            m[(i, i)] += Complex64::new(1.0, 0.0);
        }
        m[(n, n)] -= Complex64::new(ball.radius * ball.radius, 0.0);
    }
    let lmi = HermitianLmi { constant, terms: terms.into_iter().collect(), label: label.into() };
    lmi.check_hermitian()?;
    Ok(lmi)
}

trait AddAssignView {
    fn add_assign(self, rhs: &CMat);
}

impl AddAssignView for nalgebra::DMatrixViewMut<'_, Complex64> {
    fn add_assign(mut self, rhs: &CMat) {
        self += rhs;
    }
}

/// Exact compression of a bordered S-procedure LMI.
///
/// Every non-multiplier coefficient has its top-left block and border inside the
/// subspace spanned by their block-projected columns; on the orthogonal complement the
/// matrix is `sum w_k P_k`, which is PSD for nonnegative multipliers. Keeping only the
/// subspace (plus the border coordinate) therefore gives an equivalent, smaller LMI.
pub fn reduce_bordered(lmi: &HermitianLmi, blocks: &[Range<usize>], multipliers: &[Var]) -> Result<HermitianLmi> {
    let dim = lmi.dim();
    if dim == 0 {
        return Ok(lmi.clone());
    }
    let n = dim - 1;
    let sources: Vec<&CMat> = core::iter::once(&lmi.constant)
        .chain(lmi.terms.iter().filter(|(v, _)| !multipliers.contains(v)).map(|(_, m)| m))
        .collect();
    let mut bases: Vec<(usize, CMat)> = Vec::new();
    let mut covered = 0;
    for block in blocks {
        if block.end > n || block.start < covered {
            return Err(Error::Dimension(format!("{}: blocks must be ordered and inside {n}", lmi.label)));
        }
        covered = block.end;
        let len = block.len();
        let mut gram = CMat::zeros(len, len);
        for m in &sources {
            for col in 0..=n {
                let v = m.view((block.start, col), (len, 1));
                gram += &v * v.adjoint();
            }
        }
        let eig = gram.symmetric_eigen();
        let top = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
        let keep: Vec<usize> = (0..len).filter(|&i| eig.eigenvalues[i] > 1e-13 * top && top > 0.0).collect();
        let mut u = CMat::zeros(len, keep.len());
        for (c, &i) in keep.iter().enumerate() {
            u.set_column(c, &eig.eigenvectors.column(i));
        }
        bases.push((block.start, u));
    }
    if covered != n {
        return Err(Error::Dimension(format!("{}: blocks cover {covered} of {n} coordinates", lmi.label)));
    }
    let r: usize = bases.iter().map(|(_, u)| u.ncols()).sum();
    let mut t = CMat::zeros(dim, r + 1);
    let mut col = 0;
    for (start, u) in &bases {
        t.view_mut((*start, col), (u.nrows(), u.ncols())).copy_from(u);
        col += u.ncols();
    }
    t[(n, r)] = Complex64::new(1.0, 0.0);
    Ok(lmi.congruence(&t))
}

/// Robust counterpart of `B + L^H X R + R^H X^H L >= 0` over `||X||_F <= xi`:
/// `[[B - t R^H R, xi L^H], [xi L, t I]] >= 0` with multiplier `t >= 0`.
///
/// `b` is `p x p`, `l` is `q x p` (rows of affine entries) and `r_gram` is the constant
/// `R^H R` or any Hermitian upper bound on it.
pub fn sign_definiteness_lmi(
    b: &[Vec<CAffine>],
    l: &[Vec<CAffine>],
    r_gram: &CMat,
    xi: f64,
    t: Var,
    label: &str,
) -> Result<HermitianLmi> {
    let p = b.len();
    let q = l.len();
    if b.iter().any(|row| row.len() != p) || l.iter().any(|row| row.len() != p) {
        return Err(Error::Dimension(format!("{label}: inconsistent block sizes")));
    }
    if r_gram.nrows() != p || r_gram.ncols() != p {
        return Err(Error::Dimension(format!("{label}: R^H R must be {p}x{p}")));
    }
    let xi_c = Complex64::new(xi, 0.0);
    HermitianLmi::from_entries(
        p + q,
        |i, j| {
            if i < p && j < p {
                let mut e = b[i][j].clone();
                if r_gram[(i, j)] != ZERO {
                    e.terms.push((t, -r_gram[(i, j)]));
                }
                e
            } else if i >= p && j >= p {
                if i == j {
                    CAffine::real(t)
                } else {
                    CAffine::default()
                }
            } else if i >= p {
                &l[i - p][j] * xi_c
            } else {
                l[j - p][i].conj() * xi_c
            }
        },
        label,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn identity_embeds_to_identity() {
        let e = complex_to_real_embedding(&CMat::identity(2, 2)).unwrap();
        assert_eq!(e, RMat::identity(4, 4));
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut h = CMat::identity(2, 2);
        h[(0, 1)] = Complex64::new(0.0, 1.0);
        assert!(matches!(complex_to_real_embedding(&h), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn trivial_s_procedure() {
        let form = QuadraticForm {
            q_constant: CMat::zeros(2, 2),
            q_terms: vec![],
            g: vec![CAffine::default(), CAffine::default()],
            p: Affine::constant(0.7),
        };
        let lmi = s_procedure_lmi(&form, &[Ball { block: 0..2, radius: 0.0 }], &[Var(0)], "t").unwrap();
        let m = lmi.eval(&[3.0]);
        let mut expect = CMat::zeros(3, 3);
        expect[(0, 0)] = Complex64::new(3.0, 0.0);
        expect[(1, 1)] = Complex64::new(3.0, 0.0);
        expect[(2, 2)] = Complex64::new(0.7, 0.0);
        assert_eq!(m, expect);
    }
}
