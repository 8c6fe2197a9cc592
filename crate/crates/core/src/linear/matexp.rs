//! Dense complex matrices small enough for per-mode work.

use num_complex::Complex64;

use crate::{Error, Result};

/// Square complex matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    n: usize,
    a: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        CMat {
            n,
            a: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows<const N: usize>(rows: &[[Complex64; N]; N]) -> Self {
        let mut m = Self::zeros(N);
        for (i, r) in rows.iter().enumerate() {
            m.a[i * N..(i + 1) * N].copy_from_slice(r);
        }
        m
    }

    pub fn to_rows<const N: usize>(&self) -> [[Complex64; N]; N] {
        assert_eq!(self.n, N);
        let mut out = [[Complex64::new(0.0, 0.0); N]; N];
        for (i, r) in out.iter_mut().enumerate() {
            r.copy_from_slice(&self.a[i * N..(i + 1) * N]);
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.a[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.a[i * self.n + j] = v;
    }

    pub fn mul(&self, o: &CMat) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let s = self.a[i * n + k];
                if s == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.a[i * n + j] += s * o.a[k * n + j];
                }
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> CMat {
        CMat {
            n: self.n,
            a: self.a.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, o: &CMat) -> CMat {
        CMat {
            n: self.n,
            a: self.a.iter().zip(&o.a).map(|(x, y)| x + y).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self.a[i * self.n + i]).sum()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.a[i * self.n + j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Top-left `k×k` block starting at `(r, c)`.
    pub fn block(&self, r: usize, c: usize, k: usize) -> CMat {
        let mut out = CMat::zeros(k);
        for i in 0..k {
            for j in 0..k {
                out.a[i * k + j] = self.a[(r + i) * self.n + c + j];
            }
        }
        out
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.a[i * self.n + j] * v[j]).sum())
            .collect()
    }
}

const TAYLOR_DEGREE: usize = 18;
const SCALED_NORM: f64 = 0.5;

/// `e^{tM}` by scaling and squaring around a degree-18 Taylor core.
///
/// After scaling `‖tM/2^s‖₁ ≤ 1/2`, so the truncation term is below `1e-22`
/// relative to the identity.
pub fn matexp(m: &CMat, t: f64) -> Result<CMat> {
    if !m.is_finite() || !t.is_finite() {
        return Err(Error::NonFiniteMatrix);
    }
    let n = m.dim();
    let b = m.scale(Complex64::new(t, 0.0));
    let nrm = b.norm1();
    let s = if nrm > SCALED_NORM {
        (nrm / SCALED_NORM).log2().ceil() as i32
    } else {
        0
    };
    let b = b.scale(Complex64::new(0.5f64.powi(s), 0.0));
    let id = CMat::identity(n);
    let mut e = id.clone();
    for k in (1..=TAYLOR_DEGREE).rev() {
        e = id.add(&b.mul(&e).scale(Complex64::new(1.0 / k as f64, 0.0)));
    }
    for _ in 0..s {
        e = e.mul(&e);
    }
    Ok(e)
}

/// `(e^{hL}, h·φ₁(hL), h·φ₂(hL))` from one exponential of the block matrix
/// `[[hL, I, 0], [0, 0, I], [0, 0, 0]]`.
pub fn phi_functions(l: &CMat, h: f64) -> Result<(CMat, CMat, CMat)> {
    let n = l.dim();
    let mut big = CMat::zeros(3 * n);
    for i in 0..n {
        for j in 0..n {
            big.set(i, j, l.get(i, j) * h);
        }
        big.set(i, n + i, Complex64::new(1.0, 0.0));
        big.set(n + i, 2 * n + i, Complex64::new(1.0, 0.0));
    }
    let e = matexp(&big, 1.0)?;
    let hs = Complex64::new(h, 0.0);
    Ok((
        e.block(0, 0, n),
        e.block(0, n, n).scale(hs),
        e.block(0, 2 * n, n).scale(hs),
    ))
}

/// Coefficients `c[0..=n]` of `det(sI − M) = Σ c_k s^k` by Leverrier–Faddeev.
pub fn char_poly(m: &CMat) -> Vec<Complex64> {
    let n = m.dim();
    let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
    c[n] = Complex64::new(1.0, 0.0);
    let id = CMat::identity(n);
    let mut mk = CMat::zeros(n);
    for k in 1..=n {
        mk = m.mul(&mk).add(&id.scale(c[n - k + 1]));
        c[n - k] = -m.mul(&mk).trace() / k as f64;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn exp_of_zero_time_is_identity() {
        let mut m = CMat::zeros(4);
        m.set(1, 2, Complex64::new(3.0, -1.0));
        assert_eq!(matexp(&m, 0.0).unwrap(), CMat::identity(4));
    }

    #[test]
    fn diagonal() {
        let mut m = CMat::zeros(4);
        for i in 0..4 {
            m.set(i, i, c(-(i as f64) - 1.0));
        }
        let e = matexp(&m, 1.0).unwrap();
        for i in 0..4 {
            let want = (-(i as f64) - 1.0).exp();
            assert!((e.get(i, i).re - want).abs() < 1e-14 * want);
        }
    }

    #[test]
    fn nilpotent() {
        let mut m = CMat::zeros(4);
        m.set(0, 1, c(1.0));
        let e = matexp(&m, 1.0).unwrap();
        assert_eq!(e.get(0, 1), c(1.0));
        assert_eq!(e.get(0, 0), c(1.0));
    }

    #[test]
    fn rotation() {
        let mut m = CMat::zeros(2);
        m.set(0, 1, c(-1.0));
        m.set(1, 0, c(1.0));
        let e = matexp(&m, 30.0).unwrap();
        assert!((e.get(0, 0).re - 30f64.cos()).abs() < 1e-13);
        assert!((e.get(1, 0).re - 30f64.sin()).abs() < 1e-13);
    }

    #[test]
    fn phi_scalar() {
        let mut m = CMat::zeros(1);
        m.set(0, 0, c(-2.0));
        let (e, p1, p2) = phi_functions(&m, 0.3).unwrap();
        let z: f64 = -0.6;
        assert!((e.get(0, 0).re - z.exp()).abs() < 1e-15);
        assert!((p1.get(0, 0).re - 0.3 * z.exp_m1() / z).abs() < 1e-15);
        assert!((p2.get(0, 0).re - 0.3 * (z.exp() - 1.0 - z) / (z * z)).abs() < 1e-15);
    }

    #[test]
    fn nonfinite_rejected() {
        let mut m = CMat::zeros(2);
        m.set(0, 0, c(f64::NAN));
        assert!(matexp(&m, 1.0).is_err());
    }

    #[test]
    fn char_poly_companion() {
        // companion of s² + 3s + 2
        let mut m = CMat::zeros(2);
        m.set(0, 1, c(1.0));
        m.set(1, 0, c(-2.0));
        m.set(1, 1, c(-3.0));
        let p = char_poly(&m);
        assert_eq!(p, vec![c(2.0), c(3.0), c(1.0)]);
    }
}
