//! Exact rational Taylor series against the f64 kernel and matrix exponential.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use mhdlab::kernel::kernel_values;
use mhdlab::linear::matexp::{matexp, CMat};
use mhdlab::linear::symbol_matrix;

type Q = BigRational;

fn q(x: f64) -> Q {
    Q::from_float(x).expect("finite")
}

fn f(x: &Q) -> f64 {
    x.to_f64().expect("representable")
}

/// Coefficients `c0..c3` of `s⁴ + c3 s³ + c2 s² + c1 s + c0 = (s² + A²s + A²)² − A²η²`.
fn char_coeffs(xi: &Q, eta: &Q) -> [Q; 4] {
    let a2 = xi * xi + eta * eta;
    let two = Q::from_integer(BigInt::from(2));
    [
        &a2 * &a2 - &a2 * eta * eta,
        &two * &a2 * &a2,
        &a2 * &a2 + &two * &a2,
        &two * &a2,
    ]
}

/// The first `n` derivatives at `t = 0` of the solution of the characteristic
/// ODE with the given initial derivatives.
fn derivatives(c: &[Q; 4], init: [Q; 4], n: usize) -> Vec<Q> {
    let mut d: Vec<Q> = init.to_vec();
    while d.len() < n {
        let k = d.len() - 4;
        let next = -(&c[3] * &d[k + 3] + &c[2] * &d[k + 2] + &c[1] * &d[k + 1] + &c[0] * &d[k]);
        d.push(next);
    }
    d
}

/// `Σ_k d[k + shift] tᵏ/k!`, the `shift`-th time derivative of the series.
fn taylor(d: &[Q], t: &Q, shift: usize) -> Q {
    let mut sum = Q::zero();
    let mut pow = Q::one();
    for (k, dk) in d[shift..].iter().enumerate() {
        if k > 0 {
            pow = pow * t / Q::from_integer(BigInt::from(k));
        }
        sum += dk * &pow;
    }
    sum
}

const TERMS: usize = 50;

fn close(got: f64, want: f64, scale: f64, tol: f64) -> bool {
    (got - want).abs() <= tol * scale
}

#[test]
fn kernel_matches_rational_series() {
    let pts = [(0.5, 0.25), (0.0, 1.0), (1.25, 0.0), (0.75, -1.5), (1e-3, 0.7), (1.5, 1.5)];
    for (xi, eta) in pts {
        for t in [0.125, 0.5, 1.0, 2.0] {
            let (xq, yq, tq) = (q(xi), q(eta), q(t));
            let c = char_coeffs(&xq, &yq);
            let a2 = &xq * &xq + &yq * &yq;
            let z = Q::zero();
            let k = derivatives(&c, [z.clone(), z.clone(), z.clone(), Q::one()], TERMS);
            // K₁ = mean of e^{μt} over the four roots: initial data are the
            // normalized power sums p₀..p₃ of the roots (Newton's identities).
            let four = Q::from_integer(BigInt::from(4));
            let p1 = -&c[3];
            let p2 = &c[3] * &c[3] - Q::from_integer(BigInt::from(2)) * &c[2];
            let p3 = -(&c[3] * &p2) - &c[2] * &p1 - Q::from_integer(BigInt::from(3)) * &c[1];
            let k1 = derivatives(&c, [Q::one(), p1 / &four, p2 / &four, p3 / &four], TERMS);

            let kv = kernel_values(t, xi, eta);
            let want_k = f(&taylor(&k, &tq, 0));
            let want_dk = f(&taylor(&k, &tq, 1));
            let want_ddk = f(&taylor(&k, &tq, 2));
            let want_k1 = f(&taylor(&k1, &tq, 0));
            let comp = taylor(&k, &tq, 2) + &a2 * taylor(&k, &tq, 1) + &a2 * taylor(&k, &tq, 0);
            let dcomp = taylor(&k, &tq, 3) + &a2 * taylor(&k, &tq, 2) + &a2 * taylor(&k, &tq, 1);
            let scale = 1e-300 + t.powi(3);
            let tag = format!("t={t} xi={xi} eta={eta}: {kv:?}");
            assert!(close(kv.k, want_k, scale, 1e-13), "K {want_k:e} {tag}");
            assert!(close(kv.dt_k, want_dk, t * t, 1e-13), "dtK {want_dk:e} {tag}");
            assert!(close(kv.ddt_k, want_ddk, t, 1e-13), "ddtK {want_ddk:e} {tag}");
            assert!(close(kv.k1, want_k1, 1.0, 1e-13), "K1 {want_k1:e} {tag}");
            assert!(close(kv.comp, f(&comp), 1.0, 1e-13), "comp {tag}");
            assert!(close(kv.dt_comp, f(&dcomp), 1.0, 1e-13), "dt_comp {tag}");
        }
    }
}

#[derive(Clone)]
struct CQ {
    re: Q,
    im: Q,
}

fn cq_mul(a: &[Vec<CQ>], b: &[Vec<CQ>]) -> Vec<Vec<CQ>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut re = Q::zero();
                    let mut im = Q::zero();
                    for k in 0..n {
                        re += &a[i][k].re * &b[k][j].re - &a[i][k].im * &b[k][j].im;
                        im += &a[i][k].re * &b[k][j].im + &a[i][k].im * &b[k][j].re;
                    }
                    CQ { re, im }
                })
                .collect()
        })
        .collect()
}

/// `Σ (tM)ᵏ/k!` in exact arithmetic, with `M` read off the f64 matrix exactly.
fn exact_exp(m: &CMat, t: f64, terms: usize) -> Vec<Vec<CQ>> {
    let n = m.dim();
    let tq = q(t);
    let tm: Vec<Vec<CQ>> = (0..n)
        .map(|i| (0..n).map(|j| CQ { re: q(m.get(i, j).re) * &tq, im: q(m.get(i, j).im) * &tq }).collect())
        .collect();
    let mut term: Vec<Vec<CQ>> = (0..n)
        .map(|i| (0..n).map(|j| CQ { re: if i == j { Q::one() } else { Q::zero() }, im: Q::zero() }).collect())
        .collect();
    let mut sum = term.clone();
    for k in 1..terms {
        let kq = Q::from_integer(BigInt::from(k));
        term = cq_mul(&term, &tm)
            .into_iter()
            .map(|r| r.into_iter().map(|z| CQ { re: z.re / &kq, im: z.im / &kq }).collect())
            .collect();
        for i in 0..n {
            for j in 0..n {
                sum[i][j].re += &term[i][j].re;
                sum[i][j].im += &term[i][j].im;
            }
        }
    }
    sum
}

#[test]
fn matexp_matches_exact_taylor() {
    for (xi, eta, lambda, t) in [(0.5, 0.25, 0.0, 1.0), (1.5, -0.5, 0.1, 0.5), (0.0, 2.0, 0.0, 0.25), (1.0, 1.0, -0.2, 2.0)] {
        let m = symbol_matrix(xi, eta, lambda).to_cmat();
        let got = matexp(&m, t).unwrap();
        let want = exact_exp(&m, t, 60);
        for i in 0..4 {
            for j in 0..4 {
                let w = Complex64::new(f(&want[i][j].re), f(&want[i][j].im));
                let d = (got.get(i, j) - w).norm();
                assert!(d <= 1e-13 * (1.0 + w.norm()), "({i},{j}) {d:e} at xi={xi} eta={eta} t={t}");
            }
        }
    }
}
