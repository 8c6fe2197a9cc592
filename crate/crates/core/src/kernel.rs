//! Fourier symbols of the fourth-order kernel and its composites.
//!
//! Every symbol is a combination of the four exponential branches
//! `-A²/2 ± √(¼A⁴ − A² ± A|η|)`. They are evaluated through the entire
//! functions `g(z,t) = sinh(t√z)/√z` and `h(z,t) = cosh(t√z)`, always with the
//! damping factor `e^{-A²t/2}` folded in so nothing overflows.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::Error;

const SERIES_ZT2: f64 = 1e-2;
const DD_SERIES_ZT2: f64 = 4.0;

/// Which entire function a divided difference acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Entire {
    Sinch,
    Coshc,
}

/// `(ξ, η)` together with the derived radicand data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub xi: f64,
    pub eta: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `b + c`, evaluated as `¼A⁴ − Aξ²/(A+|η|)` to avoid cancellation near the η-axis.
    pub zp: f64,
    /// `b − c`.
    pub zm: f64,
}

impl SpectralPoint {
    pub fn new(xi: f64, eta: f64) -> Self {
        let a2 = xi * xi + eta * eta;
        let a = a2.sqrt();
        let ae = eta.abs();
        let b = 0.25 * a2 * a2 - a2;
        let c = a * ae;
        let zp = if a > 0.0 {
            0.25 * a2 * a2 - a * xi * xi / (a + ae)
        } else {
            0.0
        };
        let zm = 0.25 * a2 * a2 - a2 - c;
        SpectralPoint { xi, eta, a, b, c, zp, zm }
    }

    pub fn a2(&self) -> f64 {
        self.a * self.a
    }
}

fn sinch_series(x: f64) -> f64 {
    // Σ x^k/(2k+1)!, x = z t²
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= x / ((2.0 * k) * (2.0 * k + 1.0));
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() || k > 40.0 {
            return sum;
        }
    }
}

fn coshc_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= x / ((2.0 * k - 1.0) * (2.0 * k));
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() || k > 40.0 {
            return sum;
        }
    }
}

/// `g(z,t) = sinh(t√z)/√z`, continued to `sin(t√−z)/√−z` for `z < 0`.
///
/// Returns `+inf` once the value leaves the f64 range.
pub fn sinch(z: f64, t: f64) -> f64 {
    let x = z * t * t;
    if x.abs() <= SERIES_ZT2 {
        t * sinch_series(x)
    } else if z > 0.0 {
        let w = z.sqrt();
        (t * w).sinh() / w
    } else {
        let w = (-z).sqrt();
        (t * w).sin() / w
    }
}

/// `h(z,t) = cosh(t√z)`, continued to `cos(t√−z)` for `z < 0`.
pub fn coshc(z: f64, t: f64) -> f64 {
    let x = z * t * t;
    if x.abs() <= SERIES_ZT2 {
        coshc_series(x)
    } else if z > 0.0 {
        (t * z.sqrt()).cosh()
    } else {
        (t * (-z).sqrt()).cos()
    }
}

/// `e^{-at}·g(z,t)`. Finite whenever `a ≥ √max(z,0)`.
pub fn damped_sinch(z: f64, t: f64, a: f64) -> f64 {
    let x = z * t * t;
    if x.abs() <= SERIES_ZT2 {
        (-a * t).exp() * t * sinch_series(x)
    } else if z > 0.0 {
        let w = z.sqrt();
        ((w - a) * t).exp() * (-(-2.0 * w * t).exp_m1()) / (2.0 * w)
    } else {
        let w = (-z).sqrt();
        (-a * t).exp() * (t * w).sin() / w
    }
}

/// `e^{-at}·h(z,t)`.
pub fn damped_coshc(z: f64, t: f64, a: f64) -> f64 {
    let x = z * t * t;
    if x.abs() <= SERIES_ZT2 {
        (-a * t).exp() * coshc_series(x)
    } else if z > 0.0 {
        let w = z.sqrt();
        0.5 * ((w - a) * t).exp() * (1.0 + (-2.0 * w * t).exp())
    } else {
        (-a * t).exp() * (t * (-z).sqrt()).cos()
    }
}

fn damped(f: Entire, z: f64, t: f64, a: f64) -> f64 {
    match f {
        Entire::Sinch => damped_sinch(z, t, a),
        Entire::Coshc => damped_coshc(z, t, a),
    }
}

fn csqrt(z: f64) -> Complex64 {
    if z >= 0.0 {
        Complex64::new(z.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-z).sqrt())
    }
}

fn shc(x: Complex64) -> Complex64 {
    if x.norm() < 1e-3 {
        let x2 = x * x;
        Complex64::new(1.0, 0.0) + x2 / 6.0 * (Complex64::new(1.0, 0.0) + x2 / 20.0)
    } else {
        x.sinh() / x
    }
}

/// `e^{-at}·(f(zp) − f(zm))/(zp − zm)` with `zp − zm = 2c`.
///
/// Three regimes: the entire series when both points sit inside `|z|t² ≤ 4`,
/// a product (sum-to-product) form when the two square roots are close, and
/// the plain two-point quotient otherwise.
fn dd_core(f: Entire, zp: f64, zm: f64, c: f64, t: f64, a: f64) -> f64 {
    let t2 = t * t;
    let xp = zp * t2;
    let xm = zm * t2;
    let xmax = xp.abs().max(xm.abs());
    if xmax <= DD_SERIES_ZT2 {
        // Σ_m coef_m (x1^m − x2^m)/(x1 − x2), with Q_m by recurrence.
        let mut q = 1.0;
        let mut pm = 1.0;
        let mut fact = match f {
            Entire::Sinch => 6.0,
            Entire::Coshc => 2.0,
        };
        let mut sum = q / fact;
        let mut m = 1.0;
        loop {
            pm *= xm;
            q = xp * q + pm;
            m += 1.0;
            fact *= match f {
                Entire::Sinch => (2.0 * m) * (2.0 * m + 1.0),
                Entire::Coshc => (2.0 * m - 1.0) * (2.0 * m),
            };
            sum += q / fact;
            let bound = m * xmax.powf(m - 1.0) / fact;
            if bound <= 1e-18 * sum.abs() || m > 60.0 {
                break;
            }
        }
        let scale = match f {
            Entire::Sinch => t2 * t,
            Entire::Coshc => t2,
        };
        return (-a * t).exp() * scale * sum;
    }
    let w1 = csqrt(zp);
    let w2 = csqrt(zm);
    let s = w1 + w2;
    let delta = 2.0 * c / s;
    if (t * delta).norm() > 1.0 || s.norm() == 0.0 {
        return (damped(f, zp, t, a) - damped(f, zm, t, a)) / (2.0 * c);
    }
    let w = 0.5 * s;
    let ep = ((w - a) * t).exp();
    let em = ((-w - a) * t).exp();
    let sh = shc(0.5 * t * delta);
    match f {
        Entire::Sinch => {
            let ecw = 0.5 * (ep + em);
            let es2 = 0.5 * (((w2 - a) * t).exp() - ((-w2 - a) * t).exp());
            (ecw * sh * t / (w1 * s) - es2 / (w1 * w2 * s)).re
        }
        Entire::Coshc => {
            let esw = 0.5 * (ep - em);
            (esw * sh * t / s).re
        }
    }
}

/// `(f(b+c) − f(b−c))/(2c)`, continuous down to `c = 0` where it is `∂_z f(b)`.
pub fn divided_diff(f: Entire, b: f64, c: f64, t: f64) -> f64 {
    dd_core(f, b + c, b - c, c, t, 0.0)
}

/// `e^{-at}·(f(b+c) − f(b−c))/(2c)`; finite whenever `a ≥ √max(b+c, 0)`.
pub fn damped_divided_diff(f: Entire, b: f64, c: f64, t: f64, a: f64) -> f64 {
    dd_core(f, b + c, b - c, c, t, a)
}

/// All kernel symbols at one `(t, ξ, η)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelValues {
    pub t: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "K1")]
    pub k1: f64,
    #[serde(rename = "dtK")]
    pub dt_k: f64,
    #[serde(rename = "ddtK")]
    pub ddt_k: f64,
    pub comp: f64,
    pub comp_x: f64,
    pub dt_comp: f64,
    pub ddt_comp: f64,
    /// `∂ₜK̂₁`.
    #[serde(rename = "dtK1")]
    pub dt_k1: f64,
    /// `∂ₜ(∂ₜₜ + A²∂ₜ + ξ²)K̂`.
    pub dt_comp_x: f64,
}

/// `K̂(t,ξ,η)`.
pub fn k_hat(t: f64, xi: f64, eta: f64) -> f64 {
    let p = SpectralPoint::new(xi, eta);
    dd_core(Entire::Sinch, p.zp, p.zm, p.c, t, 0.5 * p.a2())
}

/// `K̂₁(t,ξ,η)`, the mean of the four exponential branches.
pub fn k1_hat(t: f64, xi: f64, eta: f64) -> f64 {
    let p = SpectralPoint::new(xi, eta);
    let a = 0.5 * p.a2();
    0.5 * (damped_coshc(p.zp, t, a) + damped_coshc(p.zm, t, a))
}

/// Per-branch sums for one radicand `z`, with roots `μ± = −a ± √z`:
/// `[G₀, G₁, G₂, H₀, H₁]`, `Gₖ = (μ₊ᵏe^{μ₊t} − μ₋ᵏe^{μ₋t})/(μ₊ − μ₋)`,
/// `Hₖ = (μ₊ᵏe^{μ₊t} + μ₋ᵏe^{μ₋t})/2`. `za2 = z − a²` is passed exactly so
/// the slow root keeps full relative precision.
fn branch_sums(z: f64, za2: f64, a: f64, t: f64) -> [f64; 5] {
    if z >= 0.0 {
        let w = z.sqrt();
        let mp = za2 / (w + a);
        let mm = -a - w;
        let ep = (mp * t).exp();
        let em = (mm * t).exp();
        let d = 2.0 * w;
        [
            (ep - em) / d,
            (mp * ep - mm * em) / d,
            (mp * mp * ep - mm * mm * em) / d,
            0.5 * (ep + em),
            0.5 * (mp * ep + mm * em),
        ]
    } else {
        let om = (-z).sqrt();
        let mu = Complex64::new(-a, om);
        let e = (mu * t).exp();
        let (e1, e2) = (mu * e, mu * mu * e);
        [e.im / om, e1.im / om, e2.im / om, e.re, e1.re]
    }
}

fn two_point_regime(p: &SpectralPoint, t: f64) -> bool {
    let t2 = t * t;
    if p.c == 0.0 || (p.zp * t2).abs().max((p.zm * t2).abs()) <= DD_SERIES_ZT2 {
        return false;
    }
    let s = csqrt(p.zp) + csqrt(p.zm);
    s.norm() == 0.0 || (t * 2.0 * p.c / s).norm() > 1.0
}

pub fn kernel_values(t: f64, xi: f64, eta: f64) -> KernelValues {
    let p = SpectralPoint::new(xi, eta);
    let a2 = p.a2();
    let a = 0.5 * a2;
    let k = dd_core(Entire::Sinch, p.zp, p.zm, p.c, t, a);
    let hp = damped_coshc(p.zp, t, a);
    let hm = damped_coshc(p.zm, t, a);
    let k1 = 0.5 * (hp + hm);
    if two_point_regime(&p, t) {
        // Separated branches: sum them directly so time derivatives and the
        // ξ²-weighted combinations of the slow branch do not cancel.
        let c = p.c;
        let e2 = eta * eta;
        let ae = eta.abs();
        let cm = if p.a > 0.0 { ae * xi * xi / (p.a + ae) } else { 0.0 };
        let sp = branch_sums(p.zp, -p.a * xi * xi / (p.a + ae), a, t);
        let sm = branch_sums(p.zm, -a2 - c, a, t);
        let dd = |i: usize| (sp[i] - sm[i]) / (2.0 * c);
        let av = |i: usize| 0.5 * (sp[i] + sm[i]);
        let mix = |i: usize| (cm * sp[i] + (c + e2) * sm[i]) / (2.0 * c);
        return KernelValues {
            t,
            k,
            k1,
            dt_k: dd(1),
            ddt_k: dd(2),
            comp: av(0),
            comp_x: mix(0),
            dt_comp: av(1),
            ddt_comp: av(2),
            dt_k1: 0.5 * (sp[4] + sm[4]),
            dt_comp_x: mix(1),
        };
    }
    let ddh = dd_core(Entire::Coshc, p.zp, p.zm, p.c, t, a);
    let dt_k = -a * k + ddh;
    let gp = damped_sinch(p.zp, t, a);
    let gm = damped_sinch(p.zm, t, a);
    let comp = 0.5 * (gp + gm);
    let dt_k1 = -a * k1 + 0.5 * (p.zp * gp + p.zm * gm);
    let dt_comp = -a * comp + k1;
    let ddt_k = comp - a2 * dt_k - a2 * k;
    let comp_x = comp - eta * eta * k;
    let ddt_comp = -a * dt_comp + dt_k1;
    KernelValues {
        t,
        k,
        k1,
        dt_k,
        ddt_k,
        comp,
        comp_x,
        dt_comp,
        ddt_comp,
        dt_k1,
        dt_comp_x: dt_comp - eta * eta * dt_k,
    }
}

impl KernelValues {
    /// The symbol bounded by pointwise estimate `which` (1..=8).
    pub fn estimate_lhs(&self, which: Estimate) -> f64 {
        match which {
            Estimate::K => self.k,
            Estimate::Kt => self.dt_k,
            Estimate::Ktt => self.ddt_k,
            Estimate::Comp => self.comp,
            Estimate::DtComp => self.dt_comp,
            Estimate::DdtComp => self.ddt_comp,
            Estimate::CompX => self.comp_x,
            Estimate::DtCompX => self.dt_comp_x,
        }
    }
}

/// The eight pointwise estimates, in their displayed order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Estimate {
    K = 1,
    Kt = 2,
    Ktt = 3,
    Comp = 4,
    DtComp = 5,
    DdtComp = 6,
    CompX = 7,
    DtCompX = 8,
}

impl Estimate {
    pub const ALL: [Estimate; 8] = [
        Estimate::K,
        Estimate::Kt,
        Estimate::Ktt,
        Estimate::Comp,
        Estimate::DtComp,
        Estimate::DdtComp,
        Estimate::CompX,
        Estimate::DtCompX,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }
}

impl TryFrom<u8> for Estimate {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self, Error> {
        Estimate::ALL
            .get((v as usize).wrapping_sub(1))
            .copied()
            .ok_or(Error::UnknownEstimate(v))
    }
}

/// Right-hand side of pointwise estimate `which`, indicators taken literally.
pub fn bound_envelope(which: Estimate, t: f64, xi: f64, eta: f64, c_decay: f64) -> f64 {
    let a2 = xi * xi + eta * eta;
    let a = a2.sqrt();
    let ax = xi.abs();
    let ae = eta.abs();
    let high = if a >= 1.0 { (-c_decay * t).exp() } else { 0.0 };
    let low = if a <= 1.0 { (-0.25 * a2 * t).exp() } else { 0.0 };
    let aniso = if ax <= a2 {
        (-xi * xi / (2.0 * a2) * t).exp()
    } else {
        0.0
    };
    let (h, l, s) = match which {
        Estimate::K => (
            1.0 / (a2 * a2),
            (1.0 / (a * ax * ae)).min(1.0 / (a2 * a2)),
            1.0 / (a2 * a2),
        ),
        Estimate::Kt => (
            1.0 / (a2 * a2),
            (1.0 / (a2 * a)).min(1.0 / (a * ae)),
            xi * xi / (a2 * a2 * a2),
        ),
        Estimate::Ktt => (
            1.0 / (a2 * a2),
            (1.0 / a2).min(1.0 / ae),
            xi.powi(4) / a2.powi(4),
        ),
        Estimate::Comp => (1.0 / a2, (1.0 / ax).min(1.0 / a2), 1.0 / a2),
        Estimate::DtComp => (1.0 / a2, 1.0, xi * xi / (a2 * a2)),
        Estimate::DdtComp => (1.0 / a2, a, xi.powi(4) / a2.powi(3)),
        Estimate::CompX => (1.0 / a2, 1.0 / a, xi * xi / (a2 * a2)),
        Estimate::DtCompX => (1.0 / a2, 1.0, xi.powi(4) / a2.powi(3)),
    };
    let term = |w: f64, f: f64| if w == 0.0 { 0.0 } else { w * f };
    term(high, h) + term(low, l) + term(aniso, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinch_special_values() {
        assert_eq!(sinch(0.0, 2.5), 2.5);
        assert!(sinch(-std::f64::consts::PI.powi(2), 1.0).abs() < 1e-15);
        assert!((sinch(1.0, 1.0) - 1.0f64.sinh()).abs() < 1e-15);
    }

    #[test]
    fn coshc_special_values() {
        assert_eq!(coshc(3.0, 0.0), 1.0);
        assert!((coshc(-std::f64::consts::PI.powi(2), 1.0) + 1.0).abs() < 1e-15);
        assert!((coshc(4.0, 0.5) - 1.0f64.cosh()).abs() < 1e-15);
    }

    #[test]
    fn divided_diff_at_origin() {
        for t in [0.1, 1.0, 10.0] {
            let g = divided_diff(Entire::Sinch, 0.0, 0.0, t);
            assert!((g - t * t * t / 6.0).abs() <= 1e-15 * t * t * t);
            let h = divided_diff(Entire::Coshc, 0.0, 0.0, t);
            assert!((h - t * t / 2.0).abs() <= 1e-15 * t * t);
        }
    }

    #[test]
    fn divided_diff_two_point_agrees() {
        let naive = (sinch(-0.45, 1.0) - sinch(-1.05, 1.0)) / 0.6;
        let v = divided_diff(Entire::Sinch, -0.75, 0.3, 1.0);
        assert!((v - naive).abs() <= 1e-11 * naive.abs());
    }

    #[test]
    fn kernel_at_time_zero() {
        let kv = kernel_values(0.0, 0.7, -1.3);
        assert_eq!(kv.k, 0.0);
        assert_eq!(kv.dt_k, 0.0);
        assert_eq!(kv.comp, 0.0);
        assert_eq!(kv.k1, 1.0);
        assert_eq!(kv.dt_comp, 1.0);
        assert_eq!(kv.ddt_k, 0.0);
        assert_eq!(k_hat(0.0, 3.0, 4.0), 0.0);
        assert_eq!(k1_hat(0.0, 3.0, 4.0), 1.0);
    }

    #[test]
    fn kernel_at_zero_frequency() {
        for t in [0.1, 1.0, 10.0] {
            let k = k_hat(t, 0.0, 0.0);
            assert!((k - t * t * t / 6.0).abs() <= 1e-12 * t * t * t / 6.0);
            assert_eq!(k1_hat(t, 0.0, 0.0), 1.0);
        }
    }

    #[test]
    fn eta_axis_matches_series_limit() {
        // ξ = 1, η = 0: c = 0, b = -3/4.
        for t in [0.5, 2.0, 7.0] {
            let k = k_hat(t, 1.0, 0.0);
            let h = 1e-4;
            let fd = (sinch(-0.75 + h, t) - sinch(-0.75 - h, t)) / (2.0 * h);
            let want = (-0.5 * t).exp() * fd;
            assert!((k - want).abs() < 1e-7 * want.abs().max(1e-3), "{t}: {k} {want}");
        }
    }

    #[test]
    fn composite_identities() {
        let kv = kernel_values(3.0, 0.4, 0.9);
        let a2 = 0.4f64 * 0.4 + 0.9 * 0.9;
        let scale = kv.comp.abs() + 0.81 * kv.k.abs();
        assert!((kv.comp_x - kv.comp + 0.81 * kv.k).abs() <= 1e-14 * scale);
        assert!((kv.dt_comp - (-0.5 * a2 * kv.comp + kv.k1)).abs() < 1e-15);
        let d = kv.dt_comp_x - (kv.dt_comp - 0.81 * kv.dt_k);
        assert!(d.abs() <= 1e-14 * (kv.dt_comp.abs() + kv.dt_k.abs()));
    }

    #[test]
    fn slow_branch_near_eta_axis() {
        // Along ξ → 0 the slow root is −ξ²|η|/(A(A+|η|))·… so time derivatives
        // of the surviving branch scale like ξ².
        let t = 1000.0;
        let eta = 0.7;
        let a = |x: f64| kernel_values(t, x, eta);
        let r1 = a(1e-6).dt_k / a(2e-6).dt_k;
        assert!((r1 - 0.25).abs() < 1e-3, "{r1}");
        let r2 = a(1e-6).comp_x / a(2e-6).comp_x;
        assert!((r2 - 0.25).abs() < 1e-3, "{r2}");
        assert!(a(1e-12).dt_comp.abs() < 1e-20);
    }

    #[test]
    fn envelope_example() {
        let r = 2f64.sqrt();
        let v = bound_envelope(Estimate::K, 0.0, r, r, 1.0 / 16.0);
        assert!((v - 0.125).abs() < 1e-15);
        assert!(Estimate::try_from(9).is_err());
        assert_eq!(Estimate::try_from(4).unwrap(), Estimate::Comp);
    }
}
