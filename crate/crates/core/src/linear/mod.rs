//! Exact linear theory of the perturbation system.
//!
//! With `∂ₓ → iξ`, `∂_y → iη`, `Δ → −A²` the linearization reads
//! `∂ₜÛ = Â Û` with `Û = (n̂, û, v̂, ψ̂)`. Its flow is available two ways:
//! the matrix exponential of [`symbol_matrix`], and the kernel representation
//! [`semigroup_matrix`], a 4×4 table of multipliers against [`KernelValues`].

pub mod decay;
pub mod matexp;
pub mod quadrature;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::{PerturbationState, SpectralField};
use crate::kernel::{kernel_values, KernelValues};
use crate::Result;
pub use matexp::{char_poly, matexp, phi_functions, CMat};

pub type Mat4 = [[Complex64; 4]; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Per-mode symbol of the linear operator, `λ` entering the velocity rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeMatrix {
    pub entries: Mat4,
    pub xi: f64,
    pub eta: f64,
    pub lambda: f64,
}

impl ModeMatrix {
    pub fn to_cmat(&self) -> CMat {
        CMat::from_rows(&self.entries)
    }
}

pub fn symbol_matrix(xi: f64, eta: f64, lambda: f64) -> ModeMatrix {
    let a2 = xi * xi + eta * eta;
    let entries = [
        [ZERO, -I * xi, -I * eta, ZERO],
        [-I * xi, re(-a2 - lambda * xi * xi), re(-lambda * xi * eta), ZERO],
        [-I * eta, re(-lambda * xi * eta), re(-a2 - lambda * eta * eta), re(a2)],
        [ZERO, ZERO, re(-1.0), ZERO],
    ];
    ModeMatrix {
        entries,
        xi,
        eta,
        lambda,
    }
}

/// `e^{tÂ}` for one mode.
pub fn mode_exponential(xi: f64, eta: f64, lambda: f64, t: f64) -> Result<Mat4> {
    Ok(matexp(&symbol_matrix(xi, eta, lambda).to_cmat(), t)?.to_rows())
}

/// Coefficients (ascending) of `(s² + A²s + A²)² − A²η²`.
pub fn target_char_poly(xi: f64, eta: f64) -> [f64; 5] {
    let a2 = xi * xi + eta * eta;
    [
        a2 * a2 - a2 * eta * eta,
        2.0 * a2 * a2,
        a2 * a2 + 2.0 * a2,
        2.0 * a2,
        1.0,
    ]
}

/// Largest coefficient mismatch between `det(sI − Â₀)` and the factorized
/// fourth-order polynomial.
pub fn char_poly_check(xi: f64, eta: f64) -> f64 {
    let p = char_poly(&symbol_matrix(xi, eta, 0.0).to_cmat());
    let q = target_char_poly(xi, eta);
    p.iter()
        .zip(q)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

/// The four roots `−A²/2 ± √(¼A⁴ − A² ± A|η|)`.
pub fn branch_roots(xi: f64, eta: f64) -> [Complex64; 4] {
    let p = crate::kernel::SpectralPoint::new(xi, eta);
    let a = -0.5 * p.a2();
    let sp = Complex64::new(p.zp, 0.0).sqrt();
    let sm = Complex64::new(p.zm, 0.0).sqrt();
    [a + sp, a - sp, a + sm, a - sm]
}

/// Which kernel quantity a multiplier term carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelFactor {
    K,
    DtK,
    Comp,
    K1,
}

/// One signed monomial `coef · i^imag · ξ^px · η^py · (A²)^pa · kernel`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub row: usize,
    pub col: usize,
    pub coef: f64,
    pub imag: bool,
    pub px: i32,
    pub py: i32,
    pub pa: i32,
    pub kernel: KernelFactor,
}

const fn term(
    row: usize,
    col: usize,
    coef: f64,
    imag: bool,
    px: i32,
    py: i32,
    pa: i32,
    kernel: KernelFactor,
) -> Term {
    Term {
        row,
        col,
        coef,
        imag,
        px,
        py,
        pa,
        kernel,
    }
}

use KernelFactor::{Comp, DtK, K, K1};

/// Kernel representation of `e^{tÂ₀}`; `SEMIGROUP_TERMS[j]` contributes to entry `(row, col)`.
/// Order: rows n, u, v, ψ.
pub const SEMIGROUP_TERMS: [Term; 28] = [
    term(0, 0, 0.5, false, 0, 0, 1, Comp),
    term(0, 0, 1.0, false, 0, 0, 0, K1),
    term(0, 1, -1.0, true, 1, 0, 0, Comp),
    term(0, 2, 1.0, true, 0, 1, 1, K),
    term(0, 2, -1.0, true, 0, 1, 0, Comp),
    term(0, 3, -1.0, true, 0, 1, 2, K),
    term(0, 3, -1.0, true, 0, 1, 1, DtK),
    term(1, 0, -1.0, true, 1, 0, 0, Comp),
    term(1, 1, 1.0, false, 0, 2, 0, DtK),
    term(1, 1, -0.5, false, 0, 0, 1, Comp),
    term(1, 1, 1.0, false, 0, 0, 0, K1),
    term(1, 2, -1.0, false, 1, 1, 0, DtK),
    term(1, 3, -1.0, false, 1, 1, 1, K),
    term(2, 0, 1.0, true, 0, 1, 1, K),
    term(2, 0, -1.0, true, 0, 1, 0, Comp),
    term(2, 1, -1.0, false, 1, 1, 0, DtK),
    term(2, 2, -1.0, false, 0, 2, 0, DtK),
    term(2, 2, -0.5, false, 0, 0, 1, Comp),
    term(2, 2, 1.0, false, 0, 0, 0, K1),
    term(2, 3, -1.0, false, 0, 2, 1, K),
    term(2, 3, 1.0, false, 0, 0, 1, Comp),
    term(3, 0, 1.0, true, 0, 1, 1, K),
    term(3, 0, 1.0, true, 0, 1, 0, DtK),
    term(3, 1, 1.0, false, 1, 1, 0, K),
    term(3, 2, 1.0, false, 0, 2, 0, K),
    term(3, 2, -1.0, false, 0, 0, 0, Comp),
    term(3, 3, 0.5, false, 0, 0, 1, Comp),
    term(3, 3, 1.0, false, 0, 0, 0, K1),
];

/// Assemble the propagator from an arbitrary term table.
pub fn semigroup_matrix_from(terms: &[Term], kv: &KernelValues, xi: f64, eta: f64) -> Mat4 {
    let a2 = xi * xi + eta * eta;
    let mut m = [[ZERO; 4]; 4];
    for tm in terms {
        let k = match tm.kernel {
            K => kv.k,
            DtK => kv.dt_k,
            Comp => kv.comp,
            K1 => kv.k1,
        };
        let mag = tm.coef * xi.powi(tm.px) * eta.powi(tm.py) * a2.powi(tm.pa) * k;
        m[tm.row][tm.col] += if tm.imag { I * mag } else { re(mag) };
    }
    m
}

pub fn semigroup_matrix(t: f64, xi: f64, eta: f64) -> Mat4 {
    semigroup_matrix_from(&SEMIGROUP_TERMS, &kernel_values(t, xi, eta), xi, eta)
}

pub fn apply4(m: &Mat4, u: &[Complex64; 4]) -> [Complex64; 4] {
    let mut out = [ZERO; 4];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(u).map(|(a, b)| a * b).sum();
    }
    out
}

/// `Û(t)` from `Û(0)` at one mode via the kernel representation (λ = 0).
pub fn kernel_semigroup_mode(u0: &[Complex64; 4], t: f64, xi: f64, eta: f64) -> [Complex64; 4] {
    apply4(&semigroup_matrix(t, xi, eta), u0)
}

/// Apply a per-mode 4×4 propagator to every mode of a state.
pub fn apply_modewise<F>(state: &PerturbationState, prop: F) -> PerturbationState
where
    F: Fn(f64, f64) -> Mat4 + Sync,
{
    let grid = state.grid().clone();
    let nx = grid.nx;
    let mut out = [
        vec![ZERO; grid.len()],
        vec![ZERO; grid.len()],
        vec![ZERO; grid.len()],
        vec![ZERO; grid.len()],
    ];
    let src = [
        &state.n.coeffs,
        &state.u.coeffs,
        &state.v.coeffs,
        &state.psi.coeffs,
    ];
    let [o0, o1, o2, o3] = &mut out;
    o0.par_chunks_mut(nx)
        .zip(o1.par_chunks_mut(nx))
        .zip(o2.par_chunks_mut(nx))
        .zip(o3.par_chunks_mut(nx))
        .enumerate()
        .for_each(|(l, (((r0, r1), r2), r3))| {
            let eta = grid.eta[l];
            for k in 0..nx {
                let idx = l * nx + k;
                let u = [src[0][idx], src[1][idx], src[2][idx], src[3][idx]];
                if u.iter().all(|z| *z == ZERO) {
                    continue;
                }
                let m = prop(grid.xi[k], eta);
                let w = apply4(&m, &u);
                r0[k] = w[0];
                r1[k] = w[1];
                r2[k] = w[2];
                r3[k] = w[3];
            }
        });
    let [a, b, c, d] = out;
    PerturbationState {
        n: SpectralField::from_coeffs(grid.clone(), a),
        u: SpectralField::from_coeffs(grid.clone(), b),
        v: SpectralField::from_coeffs(grid.clone(), c),
        psi: SpectralField::from_coeffs(grid, d),
    }
}

/// Kernel-representation flow of a whole state.
pub fn kernel_semigroup_field(state: &PerturbationState, t: f64) -> PerturbationState {
    apply_modewise(state, |xi, eta| semigroup_matrix(t, xi, eta))
}

/// Matrix-exponential flow of a whole state, `λ` included.
pub fn matexp_field(state: &PerturbationState, t: f64, lambda: f64) -> Result<PerturbationState> {
    // symbol entries are finite for finite wavenumbers, so matexp cannot fail here
    Ok(apply_modewise(state, |xi, eta| {
        mode_exponential(xi, eta, lambda, t).expect("finite symbol")
    }))
}

/// Oracle comparison statistics over random modes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleReport {
    pub samples: usize,
    pub max_rel_err: f64,
    pub worst: Option<(f64, f64, f64)>,
    pub times: Vec<f64>,
    pub kmax: f64,
    pub seed: u64,
}

/// Compare a candidate per-mode propagator with the matrix exponential at
/// `samples` random wavenumbers in `[−kmax, kmax]²` and random unit `U₀`,
/// for every `t` in `times`. The error is `|Δ|₂ / (1 + |e^{tÂ}U₀|₂)`.
pub fn oracle_compare<F>(candidate: F, samples: usize, times: &[f64], kmax: f64, seed: u64) -> OracleReport
where
    F: Fn(f64, f64, f64) -> Mat4 + Sync,
{
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(f64, f64, [Complex64; 4])> = (0..samples)
        .map(|_| {
            let xi = rng.gen_range(-kmax..=kmax);
            let eta = rng.gen_range(-kmax..=kmax);
            let mut u = [ZERO; 4];
            for z in u.iter_mut() {
                *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let nrm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in u.iter_mut() {
                *z /= nrm;
            }
            (xi, eta, u)
        })
        .collect();
    let errs: Vec<(f64, (f64, f64, f64))> = times
        .iter()
        .flat_map(|&t| pts.iter().map(move |p| (t, p)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(t, (xi, eta, u))| {
            let exact = apply4(&mode_exponential(*xi, *eta, 0.0, t).expect("finite"), u);
            let got = apply4(&candidate(t, *xi, *eta), u);
            let d = exact
                .iter()
                .zip(&got)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let n = exact.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            (d / (1.0 + n), (t, *xi, *eta))
        })
        .collect();
    let mut max = 0.0;
    let mut worst = None;
    for (e, loc) in errs {
        if e > max || e.is_nan() {
            max = if e.is_nan() { f64::INFINITY } else { e };
            worst = Some(loc);
        }
    }
    OracleReport {
        samples,
        max_rel_err: max,
        worst,
        times: times.to_vec(),
        kmax,
        seed,
    }
}

/// The shipped kernel representation against the oracle.
pub fn oracle_test(samples: usize, times: &[f64], kmax: f64, seed: u64) -> OracleReport {
    oracle_compare(semigroup_matrix, samples, times, kmax, seed)
}

/// Max char-poly residual, scaled by `1 + A⁸`, on an `n×n` scan of `[−kmax, kmax]²`.
pub fn char_poly_scan(n: usize, kmax: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let xi = -kmax + 2.0 * kmax * i as f64 / (n - 1).max(1) as f64;
            let eta = -kmax + 2.0 * kmax * j as f64 / (n - 1).max(1) as f64;
            let a2 = xi * xi + eta * eta;
            worst = worst.max(char_poly_check(xi, eta) / (1.0 + a2.powi(4)));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_examples() {
        let m = symbol_matrix(0.0, 0.0, 0.7).entries;
        for (i, row) in m.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                if (i, j) == (3, 2) {
                    assert_eq!(*z, re(-1.0));
                } else {
                    assert_eq!(*z, ZERO);
                }
            }
        }
        let m = symbol_matrix(1.0, 0.0, 0.0).entries;
        assert_eq!(m[1][1], re(-1.0));
        assert_eq!(m[2][3], re(1.0));
        let m = symbol_matrix(1.0, 2.0, 0.5).entries;
        assert_eq!(m[1][1], re(-5.5));
    }

    #[test]
    fn trace_includes_lambda() {
        let m = symbol_matrix(0.3, -1.1, 0.4).to_cmat();
        let a2 = 0.09 + 1.21;
        assert!((m.trace().re - (-2.0 * a2 - 0.4 * a2)).abs() < 1e-14);
    }

    #[test]
    fn char_poly_examples() {
        assert_eq!(char_poly_check(0.0, 0.0), 0.0);
        assert!(char_poly_check(1.0, 0.0) <= 1e-12);
        assert!(char_poly_check(3.0, 4.0) <= 1e-10 * (1.0 + 25f64.powi(4)));
    }

    #[test]
    fn roots_annihilate_char_poly() {
        for (xi, eta) in [(0.3, 0.8), (2.0, -1.5), (0.01, 3.0), (5.0, 0.0)] {
            let q = target_char_poly(xi, eta);
            let a8 = (xi * xi + eta * eta as f64).powi(4);
            for r in branch_roots(xi, eta) {
                let v: Complex64 = q.iter().rev().fold(ZERO, |acc, c| acc * r + c);
                assert!(v.norm() <= 1e-8 * (1.0 + a8), "{xi} {eta} {v}");
            }
        }
    }

    #[test]
    fn kernel_flow_at_time_zero_is_identity() {
        let m = semigroup_matrix(0.0, 0.7, -1.3);
        for (i, row) in m.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((z - re(want)).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn constant_density_mode() {
        let u = kernel_semigroup_mode(&[re(1.0), ZERO, ZERO, ZERO], 3.0, 0.0, 0.0);
        assert_eq!(u[0], re(1.0));
        let e = mode_exponential(0.0, 0.0, 0.0, 3.0).unwrap();
        assert_eq!(e[0][0], re(1.0));
    }

    #[test]
    fn oracle_single_point() {
        let u0 = [re(0.5), Complex64::new(0.1, -0.3), re(-0.7), Complex64::new(0.2, 0.2)];
        let got = kernel_semigroup_mode(&u0, 5.0, 0.7, -1.3);
        let want = apply4(&mode_exponential(0.7, -1.3, 0.0, 5.0).unwrap(), &u0);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12, "{a} {b}");
        }
    }
}
