//! Soundness of the robust LMI constructions on small instances (at most six complex
//! uncertainty coordinates).

use masr_core::conic::{linearized_square, reduce_bordered, s_procedure_lmi, sign_definiteness_lmi, Affine, Ball, CAffine, QuadraticForm, Var};
use masr_core::linalg::{CMat, CVec};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gauss_mat(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMat {
    CMat::from_fn(rows, cols, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

fn min_eig(m: &CMat) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

/// Uniform point of the radius-`r` ball in `C^n`, on the sphere half of the time.
fn ball_point(n: usize, r: f64, rng: &mut ChaCha8Rng) -> CVec {
    let g = gauss_mat(n, 1, rng).column(0).into_owned();
    let radius = if rng.random::<bool>() { r } else { r * rng.random::<f64>().powf(1.0 / (2 * n) as f64) };
    g.unscale(g.norm()) * Complex64::new(radius, 0.0)
}

/// Split `0..n` into `parts` contiguous nonempty blocks.
fn blocks(n: usize, parts: usize) -> Vec<std::ops::Range<usize>> {
    let parts = parts.min(n);
    (0..parts).map(|i| (i * n / parts)..((i + 1) * n / parts)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// A PSD certificate built by construction certifies the form on every ball point.
    #[test]
    fn s_procedure_certificate_is_sound(n in 1usize..=6, nballs in 1usize..=2, seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bl = blocks(n, nballs);
        let radii: Vec<f64> = bl.iter().map(|_| rng.random_range(0.1..1.5)).collect();
        let mults: Vec<f64> = bl.iter().map(|_| rng.random_range(0.0..2.0)).collect();
        let a = gauss_mat(n + 1, n + 1, &mut rng);
        let m = &a * a.adjoint() * Complex64::new(0.05, 0.0);
        let mut q = m.view((0, 0), (n, n)).into_owned();
        let mut p = m[(n, n)].re;
        for ((b, r), w) in bl.iter().zip(&radii).zip(&mults) {
            for i in b.clone() {
                q[(i, i)] -= Complex64::new(*w, 0.0);
            }
            p += w * r * r;
        }
        let form = QuadraticForm {
            q_constant: q,
            q_terms: vec![],
            g: (0..n).map(|i| CAffine::constant(m[(i, n)])).collect(),
            p: Affine::constant(p),
        };
        let vars: Vec<Var> = (0..bl.len()).map(Var).collect();
        let balls: Vec<Ball> = bl.iter().zip(&radii).map(|(b, r)| Ball { block: b.clone(), radius: *r }).collect();
        let lmi = s_procedure_lmi(&form, &balls, &vars, "test").unwrap();
        prop_assert!((lmi.eval(&mults) - &m).norm() <= 1e-9 * m.norm().max(1.0));
        prop_assert!(lmi.embed().unwrap().min_eigenvalue(&mults) >= -1e-9);
        for _ in 0..300 {
            let mut x = CVec::zeros(n);
            for (b, r) in bl.iter().zip(&radii) {
                x.rows_mut(b.start, b.len()).copy_from(&ball_point(b.len(), *r, &mut rng));
            }
            prop_assert!(form.eval(&[], &x) >= -1e-9, "certified form negative at a ball point");
        }
    }

    /// A form that is negative somewhere in the ball admits no certificate.
    #[test]
    fn s_procedure_rejects_violated_forms(n in 1usize..=6, seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = gauss_mat(n, n, &mut rng);
        let g = gauss_mat(n, 1, &mut rng).column(0).into_owned();
        let r = rng.random_range(0.2..1.0);
        let q = &a * a.adjoint();
        let x0 = ball_point(n, r, &mut rng);
        let value_without_p = x0.dotc(&(&q * &x0)).re + 2.0 * g.dotc(&x0).re;
        let form = QuadraticForm {
            q_constant: q,
            q_terms: vec![],
            g: g.iter().map(|z| CAffine::constant(*z)).collect(),
            p: Affine::constant(-value_without_p - 0.1),
        };
        prop_assert!(form.eval(&[], &x0) < 0.0);
        let lmi = s_procedure_lmi(&form, &[Ball { block: 0..n, radius: r }], &[Var(0)], "test").unwrap().embed().unwrap();
        for k in -30..=30 {
            let w = 10f64.powf(k as f64 / 5.0);
            prop_assert!(lmi.min_eigenvalue(&[w]) < 0.0, "certificate found with multiplier {w}");
        }
        prop_assert!(lmi.min_eigenvalue(&[0.0]) < 0.0);
    }

    /// Sign-definiteness: a feasible multiplier makes the matrix PSD for every error.
    #[test]
    fn sign_definiteness_is_sound(p in 1usize..=3, q in 1usize..=3, r in 1usize..=2, seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = gauss_mat(q, p, &mut rng);
        let rm = gauss_mat(r, p, &mut rng);
        let xi = rng.random_range(0.05..1.0);
        let t = rng.random_range(0.1..3.0);
        let c = gauss_mat(p, p, &mut rng) * Complex64::new(0.1, 0.0);
        let r_gram = rm.adjoint() * &rm;
        let b = &r_gram * Complex64::new(t, 0.0) + l.adjoint() * &l * Complex64::new(xi * xi / t, 0.0) + &c * c.adjoint();
        let rows = |m: &CMat| -> Vec<Vec<CAffine>> {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| CAffine::constant(m[(i, j)])).collect()).collect()
        };
        let lmi = sign_definiteness_lmi(&rows(&b), &rows(&l), &r_gram, xi, Var(0), "test").unwrap();
        prop_assert!(min_eig(&lmi.eval(&[t])) >= -1e-9);
        for _ in 0..200 {
            let g = gauss_mat(q, r, &mut rng);
            let x = g.unscale(g.norm()) * Complex64::new(xi * rng.random::<f64>().sqrt(), 0.0);
            let lxr = l.adjoint() * &x * &rm;
            let full = &b + &lxr + lxr.adjoint();
            prop_assert!(min_eig(&full) >= -1e-9);
        }
    }

    /// The tangent square is exact at the expansion point and below the square elsewhere.
    #[test]
    fn linearized_square_is_a_tangent_minorant(n in 1usize..=4, seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nv = 3;
        let rand_affine = |rng: &mut ChaCha8Rng| CAffine {
            constant: Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)),
            terms: (0..nv).map(|v| (Var(v), Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))).collect(),
        };
        let c = rand_affine(&mut rng);
        let beta: Vec<CAffine> = (0..n).map(|_| rand_affine(&mut rng)).collect();
        let y0: Vec<f64> = (0..nv).map(|_| rng.sample(StandardNormal)).collect();
        let beta0 = CVec::from_iterator(n, beta.iter().map(|b| b.eval(&y0)));
        let form = linearized_square(c.eval(&y0), &beta0, &c, &beta);
        let square = |y: &[f64], x: &CVec| {
            let mut a = c.eval(y);
            for (b, xi) in beta.iter().zip(x.iter()) {
                a += b.eval(y) * xi;
            }
            a.norm_sqr()
        };
        for _ in 0..50 {
            let x = ball_point(n, 1.0, &mut rng);
            let y: Vec<f64> = (0..nv).map(|_| rng.sample(StandardNormal)).collect();
            prop_assert!((form.eval(&y0, &x) - square(&y0, &x)).abs() <= 1e-9 * square(&y0, &x).max(1.0));
            prop_assert!(form.eval(&y, &x) <= square(&y, &x) + 1e-9 * square(&y, &x).max(1.0));
        }
    }

    /// Compressing the bordered LMI preserves positive semidefiniteness.
    #[test]
    fn bordered_reduction_is_exact(n in 2usize..=6, seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Decision variables 0..2, multipliers 2..4; couplings of rank one keep the
        // relevant subspace small.
        let u = gauss_mat(n, 1, &mut rng).column(0).into_owned();
        let beta: Vec<CAffine> = (0..n)
            .map(|i| CAffine { constant: u[i], terms: vec![(Var(0), u[i] * Complex64::new(0.3, 0.1))] })
            .collect();
        let c = CAffine { constant: Complex64::new(2.0, 0.5), terms: vec![(Var(1), Complex64::new(1.0, 0.0))] };
        let y0 = [0.2, -0.1, 0.0, 0.0];
        let beta0 = CVec::from_iterator(n, beta.iter().map(|b| b.eval(&y0)));
        let form = linearized_square(c.eval(&y0), &beta0, &c, &beta);
        let bl = blocks(n, 2);
        let balls: Vec<Ball> = bl.iter().map(|b| Ball { block: b.clone(), radius: 0.3 }).collect();
        let mults = [Var(2), Var(3)];
        let full = s_procedure_lmi(&form, &balls, &mults, "full").unwrap();
        let reduced = reduce_bordered(&full, &bl, &mults).unwrap();
        prop_assert!(reduced.dim() <= full.dim());
        for _ in 0..100 {
            let x = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-3.0..1.0),
                10f64.powf(rng.random_range(-2.0..1.5)),
                10f64.powf(rng.random_range(-2.0..1.5)),
            ];
            let (ef, er) = (min_eig(&full.eval(&x)), min_eig(&reduced.eval(&x)));
            if ef < -1e-7 {
                prop_assert!(er < 0.0, "full {ef} reduced {er}");
            }
            if er < -1e-7 {
                prop_assert!(ef < 0.0, "full {ef} reduced {er}");
            }
        }
    }
}
