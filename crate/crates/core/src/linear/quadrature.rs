//! Continuum quadrature over frequency space.
//!
//! Polar rules integrate over `(ln A, φ)` with `ξ = A sin φ`, `η = A cos φ` on the
//! first quadrant (every symbol here depends on `|ξ|, |η|` only), angular nodes
//! clustered at `ξ = 0` through `φ = (π/2)s³`. Mixed `L^q_ξ L^r_η` norms use nested
//! Cartesian rules. Both refine globally by halving panels until two successive
//! levels agree to [`QuadOptions::rtol`].

use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kernel::{kernel_values, KernelValues};
use crate::stats::Kahan;
use crate::{Error, Result};

/// Nodes per Gauss–Legendre panel.
pub const PANEL_NODES: usize = 16;

/// `n`-point Gauss–Legendre rule on `[−1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn panel_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(PANEL_NODES))
}

/// Composite rule on `[a, b]` with `panels` equal panels.
pub fn composite(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let (x, w) = panel_rule();
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * PANEL_NODES);
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(w) {
            out.push((c + 0.5 * h * xi, 0.5 * h * wi));
        }
    }
    out
}

/// Integration region in frequency space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Region {
    /// `A ≤ 1`
    Low,
    /// `N/2 ≤ A ≤ 2N`
    Band(f64),
    /// `A ≥ 1`
    High,
    /// every `A`
    All,
}

/// `ln A` below which contributions are dropped, and above which `A` is treated as infinite.
pub const LN_A_MIN: f64 = -12.0;
pub const LN_A_MAX: f64 = 6.0;

impl Region {
    pub fn log_range(self) -> (f64, f64) {
        match self {
            Region::Low => (LN_A_MIN, 0.0),
            Region::Band(n) => ((0.5 * n).ln(), (2.0 * n).ln()),
            Region::High => (0.0, LN_A_MAX),
            Region::All => (LN_A_MIN, LN_A_MAX),
        }
    }

    pub fn parse(s: &str) -> Result<Region> {
        match s {
            "low" | "A<=1" => Ok(Region::Low),
            "high" | "A>=1" => Ok(Region::High),
            "all" => Ok(Region::All),
            _ => {
                let n = s
                    .strip_prefix("band:")
                    .or_else(|| s.strip_prefix("A~"))
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|v| *v > 0.0 && v.is_finite());
                n.map(Region::Band)
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown region `{s}`")))
            }
        }
    }

    pub fn label(self) -> String {
        match self {
            Region::Low => "low".into(),
            Region::High => "high".into(),
            Region::All => "all".into(),
            Region::Band(n) => format!("band:{n}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadOptions {
    /// Width of a radial panel in `ln A` at level 0.
    pub panel_width: f64,
    /// Angular nodes at level 0 (a multiple of [`PANEL_NODES`]).
    pub angular_nodes: usize,
    pub max_level: usize,
    /// Relative change between successive levels accepted as converged.
    pub rtol: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            panel_width: 0.5,
            angular_nodes: 256,
            max_level: 4,
            rtol: 0.01,
        }
    }
}

fn converge(
    opts: &QuadOptions,
    what: &str,
    mut eval: impl FnMut(usize) -> f64,
) -> Result<f64> {
    let mut prev = eval(0);
    for level in 1..=opts.max_level {
        let cur = eval(level);
        if !cur.is_finite() {
            return Err(Error::QuadratureNonconvergence(format!("{what}: non-finite value")));
        }
        if (cur - prev).abs() <= opts.rtol * cur.abs() {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureNonconvergence(format!(
        "{what}: no agreement to {} after {} levels",
        opts.rtol, opts.max_level
    )))
}

struct PolarNodes {
    radial: Vec<(f64, f64)>,
    angular: Vec<(f64, f64, f64)>,
}

fn polar_nodes(lo: f64, hi: f64, opts: &QuadOptions, level: usize) -> PolarNodes {
    let scale = 1usize << level;
    let rp = (((hi - lo) / opts.panel_width).ceil() as usize).max(1) * scale;
    let ap = (opts.angular_nodes / PANEL_NODES).max(1) * scale;
    let radial = composite(lo, hi, rp);
    let angular = composite(0.0, 1.0, ap)
        .into_iter()
        .map(|(s, w)| {
            let phi = FRAC_PI_2 * s * s * s;
            (phi.sin(), phi.cos(), w * 3.0 * FRAC_PI_2 * s * s)
        })
        .collect();
    PolarNodes { radial, angular }
}

fn polar_lp<F>(f: &F, lo: f64, hi: f64, q: f64, opts: &QuadOptions, level: usize) -> f64
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let nodes = polar_nodes(lo, hi, opts, level);
    let parts: Vec<f64> = nodes
        .radial
        .par_iter()
        .map(|&(la, wr)| {
            let a = la.exp();
            let mut k = Kahan::new();
            for &(s, c, wa) in &nodes.angular {
                let v = f(a * s, a * c).abs();
                if v > 0.0 {
                    k.add(wa * v.powf(q));
                }
            }
            k.value() * wr * a * a
        })
        .collect();
    let mut k = Kahan::new();
    parts.iter().for_each(|p| k.add(*p));
    (4.0 * k.value()).powf(1.0 / q)
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Maximize a unimodal-ish function on `[a, b]` by golden-section search.
fn golden_max(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..iters {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = g(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn polar_sup<F>(f: &F, lo: f64, hi: f64, opts: &QuadOptions, level: usize) -> f64
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let nodes = polar_nodes(lo, hi, opts, level);
    let na = nodes.angular.len();
    let (best, i, j) = nodes
        .radial
        .par_iter()
        .enumerate()
        .map(|(i, &(la, _))| {
            let a = la.exp();
            let mut best = (0.0f64, i, 0usize);
            for (j, &(s, c, _)) in nodes.angular.iter().enumerate() {
                let v = f(a * s, a * c).abs();
                if v > best.0 {
                    best = (v, i, j);
                }
            }
            best
        })
        .reduce(
            || (0.0, 0, 0),
            |x, y| if y.0 > x.0 || (y.0 == x.0 && (y.1, y.2) < (x.1, x.2)) { y } else { x },
        );
    if best == 0.0 {
        return 0.0;
    }
    let phi_of = |j: usize| (nodes.angular[j].0).asin();
    let mut la = nodes.radial[i].0;
    let mut phi = phi_of(j);
    let nr = nodes.radial.len();
    let lr = (
        if i == 0 { lo } else { nodes.radial[i - 1].0 },
        if i + 1 == nr { hi } else { nodes.radial[i + 1].0 },
    );
    let pr = (
        if j == 0 { 0.0 } else { phi_of(j - 1) },
        if j + 1 == na { FRAC_PI_2 } else { phi_of(j + 1) },
    );
    let eval = |la: f64, phi: f64| {
        let a = la.exp();
        f(a * phi.sin(), a * phi.cos()).abs()
    };
    let mut v = best;
    for _ in 0..2 {
        let (x, fx) = golden_max(|x| eval(x, phi), lr.0, lr.1, 40);
        if fx > v {
            la = x;
            v = fx;
        }
        let (p, fp) = golden_max(|p| eval(la, p), pr.0, pr.1, 40);
        if fp > v {
            phi = p;
            v = fp;
        }
    }
    v
}

/// `‖f‖_{L^q(region)}` over the whole plane (all four quadrants), `q = ∞` allowed.
pub fn polar_norm<F>(f: F, region: Region, q: f64, opts: &QuadOptions) -> Result<f64>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let (lo, hi) = region.log_range();
    if q.is_infinite() {
        converge(opts, "sup norm", |l| polar_sup(&f, lo, hi, opts, l))
    } else {
        converge(opts, "Lp norm", |l| polar_lp(&f, lo, hi, q, opts, l))
    }
}

/// Span of `ln` scales resolved below the top of a one-dimensional log rule.
const LOG_DECADES: f64 = 14.0;

fn axis_nodes(lo: f64, hi: f64, width: f64, level: usize) -> Vec<(f64, f64)> {
    if hi <= lo {
        return Vec::new();
    }
    let scale = 1usize << level;
    if lo == 0.0 {
        let (a, b) = (hi.ln() - LOG_DECADES, hi.ln());
        let p = ((LOG_DECADES / width).ceil() as usize).max(1) * scale;
        composite(a, b, p)
            .into_iter()
            .map(|(s, w)| {
                let x = s.exp();
                (x, w * x)
            })
            .collect()
    } else {
        let p = (((hi / lo).ln() / width).ceil() as usize).max(1) * scale;
        composite(lo, hi, p)
    }
}

fn radii(region: Region) -> (f64, f64) {
    match region {
        Region::Low => (0.0, 1.0),
        Region::Band(n) => (0.5 * n, 2.0 * n),
        Region::High => (1.0, LN_A_MAX.exp()),
        Region::All => (0.0, LN_A_MAX.exp()),
    }
}

fn eta_range(region: Region, xi: f64) -> (f64, f64) {
    let (r_in, r_out) = radii(region);
    let lo = (r_in * r_in - xi * xi).max(0.0).sqrt();
    let hi = (r_out * r_out - xi * xi).max(0.0).sqrt();
    (lo, hi)
}

/// Outer `ξ ≥ 0` nodes. Each stretch ending on a circle `|ξ| = r` is mapped by
/// `ξ = r sin θ`, which removes the square-root endpoint behaviour of the inner
/// limits; the stretch starting at `ξ = 0` is graded logarithmically in `θ`.
fn outer_nodes(region: Region, width: f64, level: usize) -> Vec<(f64, f64)> {
    let (r_in, r_out) = radii(region);
    let top = FRAC_PI_2.ln();
    let log_arc = |r: f64| {
        let p = ((LOG_DECADES / width).ceil() as usize).max(1) << level;
        composite(top - LOG_DECADES, top, p).into_iter().map(move |(s, w)| {
            let th = s.exp();
            (r * th.sin(), w * th * r * th.cos())
        })
    };
    if r_in == 0.0 {
        return log_arc(r_out).collect();
    }
    let th0 = (r_in / r_out).asin();
    let p = (((FRAC_PI_2 - th0) / (0.5 * width)).ceil() as usize).max(1) << level;
    let arc = composite(th0, FRAC_PI_2, p)
        .into_iter()
        .map(|(th, w)| (r_out * th.sin(), w * r_out * th.cos()));
    log_arc(r_in).chain(arc).collect()
}

fn lq(vals: impl Iterator<Item = (f64, f64)>, q: f64) -> f64 {
    if q.is_infinite() {
        vals.fold(0.0, |m, (v, _)| m.max(v.abs()))
    } else {
        let mut k = Kahan::new();
        for (v, w) in vals {
            let a = v.abs();
            if a > 0.0 {
                k.add(w * a.powf(q));
            }
        }
        (2.0 * k.value()).powf(1.0 / q)
    }
}

fn mixed_level<F>(f: &F, region: Region, q_xi: f64, q_eta: f64, opts: &QuadOptions, level: usize) -> f64
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let outer = outer_nodes(region, opts.panel_width, level);
    let inner: Vec<(f64, f64)> = outer
        .par_iter()
        .map(|&(xi, w)| {
            let (lo, hi) = eta_range(region, xi);
            let nodes = if lo > 0.0 {
                let p = 4usize << level;
                composite(lo, hi, p)
            } else {
                axis_nodes(lo, hi, opts.panel_width, level)
            };
            (lq(nodes.iter().map(|&(eta, we)| (f(xi, eta), we)), q_eta), w)
        })
        .collect();
    lq(inner.into_iter(), q_xi)
}

/// `‖ ‖f(ξ, ·)‖_{L^{q_η}} ‖_{L^{q_ξ}}` over the region.
pub fn mixed_norm<F>(f: F, region: Region, q_xi: f64, q_eta: f64, opts: &QuadOptions) -> Result<f64>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    converge(opts, "mixed norm", |l| mixed_level(&f, region, q_xi, q_eta, opts, l))
}

/// Dispatch to the polar rule when the two exponents agree.
pub fn region_norm<F>(f: F, region: Region, q_xi: f64, q_eta: f64, opts: &QuadOptions) -> Result<f64>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    if q_xi == q_eta {
        polar_norm(f, region, q_xi, opts)
    } else {
        mixed_norm(f, region, q_xi, q_eta, opts)
    }
}

/// Region class a catalogued symbol is stated on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionKind {
    Low,
    Band,
    All,
}

/// One symbol of the catalog: `value(kernel, ξ, η)` and its stated rate as a
/// function of `(1/q_ξ, 1/q_η)`.
pub struct SymbolSpec {
    pub id: &'static str,
    pub label: &'static str,
    pub region: RegionKind,
    pub default_q: (f64, f64),
    pub value: fn(&KernelValues, f64, f64) -> f64,
    pub target: Option<fn(f64) -> f64>,
}

fn a2(x: f64, y: f64) -> f64 {
    x * x + y * y
}

const INF: f64 = f64::INFINITY;

pub const SYMBOLS: &[SymbolSpec] = &[
    SymbolSpec { id: "kn1-1", label: "A^4 K", region: RegionKind::Low, default_q: (1.0, 1.0),
        value: |k, x, y| a2(x, y).powi(2) * k.k, target: Some(|iq| -0.5 * iq) },
    SymbolSpec { id: "kn1-1N", label: "K", region: RegionKind::Band, default_q: (1.0, 1.0),
        value: |k, _, _| k.k, target: Some(|iq| -0.5 * iq) },
    SymbolSpec { id: "ku1-1", label: "A xi eta K", region: RegionKind::Low, default_q: (1.0, 1.0),
        value: |k, x, y| a2(x, y).sqrt() * x * y * k.k, target: Some(|iq| -iq) },
    SymbolSpec { id: "ku1", label: "xi eta K", region: RegionKind::Band, default_q: (1.0, 1.0),
        value: |k, x, y| x * y * k.k, target: Some(|iq| -0.5 - 0.5 * iq) },
    SymbolSpec { id: "ku1-5", label: "A xi^2 eta K", region: RegionKind::Low, default_q: (1.0, 1.0),
        value: |k, x, y| a2(x, y).sqrt() * x * x * y * k.k, target: Some(|iq| -0.5 - iq) },
    SymbolSpec { id: "ku1-6", label: "xi^2 eta K", region: RegionKind::Band, default_q: (1.0, 1.0),
        value: |k, x, y| x * x * y * k.k, target: Some(|iq| -1.0 - 0.5 * iq) },
    SymbolSpec { id: "ku3", label: "A^2 (A^2 - A|eta|) K", region: RegionKind::Band, default_q: (1.0, 1.0),
        value: |k, x, y| { let s = a2(x, y); s * (s - s.sqrt() * y.abs()) * k.k }, target: Some(|iq| -1.0 - 0.5 * iq) },
    SymbolSpec { id: "kn2-1", label: "eta dtK", region: RegionKind::Band, default_q: (1.0, 1.0),
        value: |k, _, y| y * k.dt_k, target: Some(|iq| -1.0 - 0.5 * iq) },
    SymbolSpec { id: "kn2-2", label: "A eta dtK", region: RegionKind::Low, default_q: (1.0, 1.0),
        value: |k, x, y| a2(x, y).sqrt() * y * k.dt_k, target: Some(|iq| -iq) },
    SymbolSpec { id: "kn4-1", label: "eta (ddtK + A^2 dtK)", region: RegionKind::Band, default_q: (1.0, 1.0),
        value: |k, x, y| y * (k.ddt_k + a2(x, y) * k.dt_k), target: Some(|iq| -1.0 - 0.5 * iq) },
    SymbolSpec { id: "kn4-2", label: "eta (ddtK + A^2 dtK)", region: RegionKind::Low, default_q: (1.0, 1.0),
        value: |k, x, y| y * (k.ddt_k + a2(x, y) * k.dt_k), target: Some(|iq| -iq) },
    SymbolSpec { id: "ku2", label: "A^2 (ddtK + A^2 dtK)", region: RegionKind::Band, default_q: (1.0, 1.0),
        value: |k, x, y| a2(x, y) * (k.ddt_k + a2(x, y) * k.dt_k), target: Some(|iq| -1.0 - 0.5 * iq) },
    SymbolSpec { id: "kn6", label: "A^2 comp", region: RegionKind::Low, default_q: (1.0, INF),
        value: |k, x, y| a2(x, y) * k.comp, target: Some(|iq| -0.5 * iq) },
    SymbolSpec { id: "kn3-1", label: "xi comp", region: RegionKind::Band, default_q: (1.0, 1.0),
        value: |k, x, _| x * k.comp, target: Some(|iq| -0.5 - 0.5 * iq) },
    SymbolSpec { id: "kn3-2", label: "xi comp", region: RegionKind::Low, default_q: (1.0, 1.0),
        value: |k, x, _| x * k.comp, target: Some(|iq| -iq) },
    SymbolSpec { id: "kn3-3", label: "A xi comp", region: RegionKind::Band, default_q: (2.0, INF),
        value: |k, x, y| a2(x, y).sqrt() * x * k.comp, target: None },
    SymbolSpec { id: "kn3-4", label: "A xi comp", region: RegionKind::Low, default_q: (2.0, INF),
        value: |k, x, y| a2(x, y).sqrt() * x * k.comp, target: None },
    SymbolSpec { id: "kn8-3", label: "xi^2 comp", region: RegionKind::Band, default_q: (1.0, 1.0),
        value: |k, x, _| x * x * k.comp, target: Some(|iq| -1.0 - 0.5 * iq) },
    SymbolSpec { id: "kn8-4", label: "xi^2 comp", region: RegionKind::Low, default_q: (1.0, 1.0),
        value: |k, x, _| x * x * k.comp, target: Some(|iq| -0.5 - iq) },
    SymbolSpec { id: "kn11-1", label: "comp_x", region: RegionKind::Band, default_q: (1.0, 1.0),
        value: |k, _, _| k.comp_x, target: Some(|iq| -1.0 - 0.5 * iq) },
    SymbolSpec { id: "kn11-2", label: "A comp_x", region: RegionKind::Low, default_q: (1.0, 1.0),
        value: |k, x, y| a2(x, y).sqrt() * k.comp_x, target: Some(|iq| -iq) },
    SymbolSpec { id: "kn5", label: "dt_comp", region: RegionKind::Low, default_q: (1.0, 1.0),
        value: |k, _, _| k.dt_comp, target: Some(|iq| -iq) },
    SymbolSpec { id: "kn5-1", label: "A dt_comp", region: RegionKind::Low, default_q: (1.0, 1.0),
        value: |k, x, y| a2(x, y).sqrt() * k.dt_comp, target: Some(|iq| -0.5 - iq) },
    SymbolSpec { id: "kn5-2", label: "dt_comp", region: RegionKind::Band, default_q: (1.0, 1.0),
        value: |k, _, _| k.dt_comp, target: Some(|iq| -1.0 - 0.5 * iq) },
    SymbolSpec { id: "ku6-2", label: "A^2 xi dt_comp", region: RegionKind::Low, default_q: (INF, INF),
        value: |k, x, y| a2(x, y) * x * k.dt_comp, target: Some(|_| -1.5) },
    SymbolSpec { id: "kn9", label: "ddt_comp + eta^2 ddtK", region: RegionKind::All, default_q: (2.0, 2.0),
        value: |k, _, y| k.ddt_comp + y * y * k.ddt_k, target: Some(|_| -1.0) },
    SymbolSpec { id: "k1", label: "K1", region: RegionKind::Low, default_q: (2.0, INF),
        value: |k, _, _| k.k1, target: Some(|_| -0.25) },
    SymbolSpec { id: "k1-2", label: "xi K1 / A", region: RegionKind::Low, default_q: (2.0, 2.0),
        value: |k, x, y| { let a = a2(x, y).sqrt(); if a == 0.0 { 0.0 } else { x * k.k1 / a } }, target: Some(|_| -0.5) },
    SymbolSpec { id: "k1-3", label: "xi K1", region: RegionKind::Low, default_q: (2.0, 2.0),
        value: |k, x, _| x * k.k1, target: Some(|_| -0.75) },
    SymbolSpec { id: "kn10", label: "A eta ddtK", region: RegionKind::All, default_q: (2.0, 2.0),
        value: |k, x, y| a2(x, y).sqrt() * y * k.ddt_k, target: Some(|_| -1.0) },
];

pub fn symbol_spec(id: &str) -> Result<&'static SymbolSpec> {
    SYMBOLS
        .iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::UnknownQuantity(id.to_string()))
}

impl SymbolSpec {
    /// Region the catalog states this symbol on, with `N` for band regions.
    pub fn default_region(&self, n: f64) -> Region {
        match self.region {
            RegionKind::Low => Region::Low,
            RegionKind::Band => Region::Band(n),
            RegionKind::All => Region::All,
        }
    }

    /// Stated `⟨t⟩` exponent for the given outer exponent, if the statement gives one.
    pub fn target_slope(&self, q_xi: f64) -> Option<f64> {
        self.target.map(|f| f(1.0 / q_xi))
    }
}

pub fn symbol_norm(id: &str, region: Region, q_xi: f64, q_eta: f64, t: f64) -> Result<f64> {
    symbol_norm_with(id, region, q_xi, q_eta, t, &QuadOptions::default())
}

pub fn symbol_norm_with(
    id: &str,
    region: Region,
    q_xi: f64,
    q_eta: f64,
    t: f64,
    opts: &QuadOptions,
) -> Result<f64> {
    if !(q_xi >= 1.0 && q_eta >= 1.0) {
        return Err(Error::InvalidConfig(format!("exponents must be ≥ 1, got ({q_xi}, {q_eta})")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidConfig(format!("t = {t}")));
    }
    let spec = symbol_spec(id)?;
    let f = |x: f64, y: f64| (spec.value)(&kernel_values(t, x, y), x, y);
    region_norm(f, region, q_xi, q_eta, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_legendre_is_exact_for_high_degree() {
        let (x, w) = gauss_legendre(16);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m30: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((m30 - 2.0 / 31.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(5);
        let m8: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((m8 - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn disk_area_and_gaussian() {
        let o = QuadOptions::default();
        let area = polar_norm(|_, _| 1.0, Region::Low, 1.0, &o).unwrap();
        assert!((area - PI).abs() < 1e-8);
        let g = polar_norm(|x, y| (-(x * x + y * y)).exp(), Region::All, 1.0, &o).unwrap();
        assert!((g - PI).abs() < 1e-8);
        let s = polar_norm(|x, y| x.abs() * (-(x * x + y * y)).exp(), Region::All, INF, &o).unwrap();
        assert!((s - (-0.5f64).exp() / 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn mixed_matches_polar_when_exponents_agree() {
        let o = QuadOptions::default();
        let f = |x: f64, y: f64| (1.0 + x * x) * (-(x * x + 3.0 * y * y)).exp();
        for r in [Region::Low, Region::Band(2.0)] {
            let p = polar_norm(f, r, 2.0, &o).unwrap();
            let m = mixed_level(&f, r, 2.0, 2.0, &o, 1);
            assert!((p - m).abs() < 1e-5 * p, "{r:?} {p} {m}");
        }
    }

    #[test]
    fn mixed_sup_examples() {
        let o = QuadOptions::default();
        // sup over η of e^{−x²−y²} is e^{−x²}; its L¹ over the unit disk strip is √π·erf(1)
        let v = mixed_norm(|x, y| (-(x * x + y * y)).exp(), Region::Low, 1.0, INF, &o).unwrap();
        assert!((v - 1.493_648_265_624_854).abs() < 1e-5, "{v}");
    }

    #[test]
    fn region_parse() {
        assert_eq!(Region::parse("low").unwrap(), Region::Low);
        assert_eq!(Region::parse("band:4").unwrap(), Region::Band(4.0));
        assert!(Region::parse("band:-1").is_err());
        assert_eq!(Region::parse(&Region::Band(0.5).label()).unwrap(), Region::Band(0.5));
    }

    #[test]
    fn symbol_norm_at_time_zero_vanishes_for_k() {
        assert_eq!(symbol_norm("kn1-1", Region::Low, INF, INF, 0.0).unwrap(), 0.0);
        assert!(symbol_norm("nope", Region::Low, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn catalog_ids_unique() {
        let mut ids: Vec<_> = SYMBOLS.iter().map(|s| s.id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), SYMBOLS.len());
    }
}
