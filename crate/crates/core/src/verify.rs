//! Scanners for the inequality-type claims.
//!
//! Every claim is "lhs ≲ rhs". A scan evaluates `lhs/rhs` on a sample set,
//! takes the maximum as the fitted constant, then repeats at double density.
//! A claim passes when both constants sit under its cap and differ by less
//! than a factor of two.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::{bump, make_grid, sobolev_norm, FourierGrid, Lp, SpectralField, Weight, BUMP_WIDTH};
use crate::kernel::{bound_envelope, damped_divided_diff, kernel_values, Entire, Estimate};
use crate::linear::quadrature::{composite, region_norm, QuadOptions, Region};
use crate::linear::{char_poly_scan, oracle_test};
use crate::stats::{fit_loglog, logspace};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub claim: String,
    pub samples: usize,
    /// Largest `lhs/rhs` seen at either density.
    pub max_ratio: f64,
    /// Fitted constant at the base density.
    pub constant: f64,
    /// Fitted constant at double density.
    pub constant_refined: f64,
    pub cap: f64,
    /// Coordinates of the worst sample, by name.
    pub worst: BTreeMap<String, f64>,
    pub refinement_stable: bool,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_slope: Option<f64>,
    pub note: String,
}

/// Running maximum that remembers where it occurred. NaN counts as infinite.
#[derive(Clone, Debug, Default)]
struct Worst {
    ratio: f64,
    at: Vec<f64>,
}

impl Worst {
    fn push(&mut self, r: f64, at: &[f64]) {
        let r = if r.is_nan() { f64::INFINITY } else { r };
        if r > self.ratio || self.at.is_empty() {
            self.ratio = r;
            self.at = at.to_vec();
        }
    }

    fn merge(mut self, o: Worst) -> Worst {
        // ties go to the earlier sample so parallel reduction is deterministic
        if o.ratio > self.ratio || self.at.is_empty() {
            self = o;
        }
        self
    }
}

fn par_worst<T: Sync>(items: &[T], f: impl Fn(&T) -> (f64, Vec<f64>) + Sync) -> Worst {
    items
        .par_iter()
        .map(|x| {
            let (r, at) = f(x);
            let mut w = Worst::default();
            w.push(r, &at);
            w
        })
        .reduce(Worst::default, Worst::merge)
}

fn stable(c0: f64, c1: f64) -> bool {
    if c0 == 0.0 && c1 == 0.0 {
        return true;
    }
    let (lo, hi) = (c0.min(c1), c0.max(c1));
    lo.is_finite() && hi.is_finite() && lo > 0.0 && hi / lo < 2.0
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    claim: &str,
    samples: usize,
    base: Worst,
    refined: Worst,
    names: &[&str],
    cap: f64,
    extra_ok: bool,
    note: String,
) -> ScanResult {
    let c0 = base.ratio;
    let c1 = refined.ratio;
    let w = if c1 >= c0 { refined } else { base };
    let stable = stable(c0, c1);
    let ok = stable && c0 <= cap && c1 <= cap && extra_ok;
    ScanResult {
        claim: claim.to_string(),
        samples,
        max_ratio: w.ratio,
        constant: c0,
        constant_refined: c1,
        cap,
        worst: names.iter().map(|n| n.to_string()).zip(w.at).collect(),
        refinement_stable: stable,
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        slope: None,
        target_slope: None,
        note,
    }
}

// ---------------------------------------------------------------- kernel

/// Default decay rate in the high-frequency envelope.
pub const C_DECAY: f64 = 1.0 / 16.0;

/// Sample grid for a pointwise scan: times, amplitudes and angles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelGrid {
    pub times: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub angles: usize,
}

impl KernelGrid {
    /// `t ∈ {0} ∪ [10⁻³, 10³]`, `A ∈ [10⁻⁴, 10³]`, angles in `[0, π/2]`,
    /// all doubled `level` times.
    pub fn at_level(level: u32) -> Self {
        let f = 1usize << level;
        let mut times = vec![0.0];
        times.extend(logspace(1e-3, 1e3, 24 * f));
        KernelGrid {
            times,
            amplitudes: logspace(1e-4, 1e3, 64 * f),
            angles: 32 * f,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len() * self.amplitudes.len() * self.angles
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `|lhs|/envelope` at one point; zero over zero counts as zero.
pub fn kernel_ratio(which: Estimate, t: f64, xi: f64, eta: f64, c_decay: f64) -> f64 {
    let lhs = kernel_values(t, xi, eta).estimate_lhs(which).abs();
    if lhs == 0.0 {
        return 0.0;
    }
    lhs / bound_envelope(which, t, xi, eta, c_decay)
}

fn kernel_worst(which: Estimate, g: &KernelGrid, c_decay: f64) -> Worst {
    let rows: Vec<(f64, f64)> = g
        .times
        .iter()
        .flat_map(|&t| g.amplitudes.iter().map(move |&a| (t, a)))
        .collect();
    let na = g.angles;
    rows.par_iter()
        .map(|&(t, a)| {
            let mut w = Worst::default();
            for j in 0..na {
                let phi = 0.5 * PI * j as f64 / (na - 1) as f64;
                let (xi, eta) = (a * phi.cos(), a * phi.sin());
                w.push(kernel_ratio(which, t, xi, eta, c_decay), &[t, xi, eta]);
            }
            w
        })
        .reduce(Worst::default, Worst::merge)
}

/// Fit the constant of pointwise estimate `which` against its envelope.
pub fn scan_kernel_bounds(which: Estimate, grid: &KernelGrid, c_decay: f64) -> Result<ScanResult> {
    if grid.times.is_empty() || grid.amplitudes.is_empty() || grid.angles < 2 {
        return Err(Error::InvalidBudget("kernel scan needs times, amplitudes and ≥ 2 angles".into()));
    }
    let fine = KernelGrid {
        times: refine_log(&grid.times),
        amplitudes: refine_log(&grid.amplitudes),
        angles: 2 * grid.angles - 1,
    };
    let base = kernel_worst(which, grid, c_decay);
    let refined = kernel_worst(which, &fine, c_decay);
    let late = KernelGrid {
        times: grid.times.iter().copied().filter(|&t| t >= 1.0).collect(),
        ..grid.clone()
    };
    let late_c = kernel_worst(which, &late, c_decay).ratio;
    Ok(assemble(
        &format!("kernel:{}", which.id()),
        grid.len() + fine.len(),
        base,
        refined,
        &["t", "xi", "eta"],
        1e3,
        true,
        format!(
            "pointwise estimate {} against its envelope, c = {c_decay}; constant over t ≥ 1 alone: {late_c:.4e}",
            which.id()
        ),
    ))
}

/// Insert geometric midpoints (arithmetic next to zero).
fn refine_log(v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * v.len());
    for w in v.windows(2) {
        out.push(w[0]);
        out.push(if w[0] > 0.0 { (w[0] * w[1]).sqrt() } else { 0.5 * w[1].min(1e-3) });
    }
    out.extend(v.last());
    out
}

// ---------------------------------------------------------------- two-branch inequality

/// The two-branch quantity `(1/c){[e^{(−a+√(b+c))t} − e^{(−a−√(b+c))t}]/√(b+c) − (same with b−c)}`,
/// which equals `4e^{−at}·(g(b+c,t) − g(b−c,t))/(2c)`.
pub fn elem1_lhs(a: f64, b: f64, c: f64, t: f64) -> f64 {
    4.0 * damped_divided_diff(Entire::Sinch, b, c, t, a)
}

/// The right-hand side without its constant.
pub fn elem1_rhs(a: f64, b: f64, c: f64, t: f64) -> f64 {
    let z = b + c;
    if z < 0.0 {
        (t * t * t).min(t / c) * (-a * t).exp()
    } else {
        let w = z.sqrt();
        (t * t * t).min(1.0 / (c * w)).min(t.hypot(1.0) / z) * ((w - a) * t).exp()
    }
}

/// `|lhs|/rhs` with the common factor `e^{(−a+√max(b+c,0))t}` divided out of
/// both sides, so the ratio stays finite where either side over- or underflows.
pub fn elem1_ratio(b: f64, c: f64, t: f64) -> f64 {
    let z = b + c;
    let w = z.max(0.0).sqrt();
    let lhs = (4.0 * damped_divided_diff(Entire::Sinch, b, c, t, w)).abs();
    if lhs == 0.0 {
        return 0.0;
    }
    let rhs = if z < 0.0 {
        (t * t * t).min(t / c)
    } else {
        (t * t * t).min(1.0 / (c * w)).min(t.hypot(1.0) / z)
    };
    lhs / rhs
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn elem1_samples(n: usize, seed: u64) -> Vec<[f64; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let a = log_uniform(&mut rng, 1e-2, 10.0);
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let b = sign * log_uniform(&mut rng, 1e-6, 1e2);
            let c = log_uniform(&mut rng, 1e-6, 1e2);
            let t = log_uniform(&mut rng, 1e-3, 1e2);
            [a, b, c, t]
        })
        .collect()
}

/// Sample the elementary two-branch inequality over `a ∈ [10⁻², 10]`, `|b| ≤ 10²`,
/// `c ∈ (0, 10²]`, `t ∈ (0, 10²]`.
pub fn check_elem1(samples: usize, seed: u64) -> Result<ScanResult> {
    budget(samples)?;
    let run = |n: usize| {
        let s = elem1_samples(n, seed);
        par_worst(&s, |&[a, b, c, t]| (elem1_ratio(b, c, t), vec![a, b, c, t]))
    };
    Ok(assemble(
        "elem1",
        3 * samples,
        run(samples),
        run(2 * samples),
        &["a", "b", "c", "t"],
        20.0,
        true,
        "two-branch exponential difference against min{t³, t/c} resp. min{t³, 1/(c√(b+c)), ⟨t⟩/(b+c)}".into(),
    ))
}

// ---------------------------------------------------------------- sin ratio

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `|sin x/x − sin y/y|`, by series when both arguments are small.
pub fn sin_ratio_lhs(x: f64, y: f64) -> f64 {
    if x.abs().max(y.abs()) < 0.1 {
        let (x2, y2) = (x * x, y * y);
        let s = -1.0 / 6.0 + (x2 + y2) / 120.0 - (x2 * x2 + x2 * y2 + y2 * y2) / 5040.0
            + (x2 + y2) * (x2 * x2 + y2 * y2) / 362880.0;
        ((x2 - y2) * s).abs()
    } else {
        (sinc(x) - sinc(y)).abs()
    }
}

pub fn sin_ratio_rhs(x: f64, y: f64) -> f64 {
    let s = x.abs() + y.abs();
    (x.abs() - y.abs()).abs() * s.min(1.0 / s)
}

pub fn sin_ratio(x: f64, y: f64) -> f64 {
    let l = sin_ratio_lhs(x, y);
    if l == 0.0 {
        0.0
    } else {
        l / sin_ratio_rhs(x, y)
    }
}

/// Sample `x, y` log-uniform in `[10⁻⁶, 10⁶]` with random signs.
pub fn check_sin_ratio(samples: usize, seed: u64) -> Result<ScanResult> {
    budget(samples)?;
    let run = |n: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s: Vec<[f64; 2]> = (0..n)
            .map(|_| {
                let mut v = [0.0; 2];
                for z in v.iter_mut() {
                    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    *z = sign * log_uniform(&mut rng, 1e-6, 1e6);
                }
                v
            })
            .collect();
        par_worst(&s, |&[x, y]| (sin_ratio(x, y), vec![x, y]))
    };
    Ok(assemble(
        "sin-ratio",
        3 * samples,
        run(samples),
        run(2 * samples),
        &["x", "y"],
        10.0,
        true,
        "|sin x/x − sin y/y| against ||x|−|y||·min{|x|+|y|, 1/(|x|+|y|)}".into(),
    ))
}

// ---------------------------------------------------------------- basic quadrature

/// Identifiers of the area-integral claims.
pub const QUAD_CLAIMS: [&str; 7] = ["At", "Axit-1", "Axit-2", "At-2", "Axit-3", "Axit-4", "Axit-5"];

/// Exponents of one area-integral claim.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadParams {
    pub beta: f64,
    /// Power of `|ξ|` in the cut-off variants; equals `beta` elsewhere.
    pub beta_prime: f64,
    pub alpha: f64,
    /// Dyadic scale of the annulus `A ∼ N`.
    pub n: f64,
    /// Rate `c` in the exponential.
    pub c: f64,
}

impl QuadParams {
    /// Parameters at which each bound is sharp.
    pub fn default_for(claim: &str) -> Result<QuadParams> {
        let p = |beta, beta_prime, c| QuadParams { beta, beta_prime, alpha: 0.0, n: 1.0, c };
        Ok(match claim {
            "At" => p(0.0, 0.0, 0.25),
            "Axit-1" => p(2.0, 2.0, 0.5),
            "Axit-2" => p(1.0, 1.0, 0.5),
            "At-2" => p(0.0, 0.0, 0.25),
            "Axit-3" | "Axit-4" | "Axit-5" => p(1.0, 1.0, 0.5),
            _ => return Err(Error::UnknownClaim(format!("quad:{claim}"))),
        })
    }
}

fn jp(t: f64) -> f64 {
    t.hypot(1.0)
}

/// Smooth stand-in for `χ_{|ξ| ≲ A²}`.
fn parabolic_cut(xi: f64, a2: f64) -> f64 {
    let r = xi / a2;
    (-r * r).exp()
}

/// `(lhs, N-power of the rhs, t-exponent of the rhs)` for one claim at time `t`.
pub fn basic_quadrature_point(claim: &str, p: &QuadParams, t: f64, opts: &QuadOptions) -> Result<(f64, f64, f64)> {
    let QuadParams { beta, beta_prime, alpha, n, c } = *p;
    let radial = move |x: f64, y: f64| {
        let a2 = x * x + y * y;
        a2.powf(0.5 * beta) * (-c * a2 * t).exp()
    };
    let xi_w = move |x: f64, y: f64| {
        let a2 = x * x + y * y;
        if x == 0.0 && beta == 0.0 {
            a2.powf(-0.5 * alpha)
        } else {
            x.abs().powf(beta) * a2.powf(-0.5 * alpha) * (-c * x * x / a2 * t).exp()
        }
    };
    let cut = move |x: f64, y: f64| {
        let a2 = x * x + y * y;
        if a2 == 0.0 {
            0.0
        } else {
            parabolic_cut(x, a2) * x.abs().powf(beta_prime) * a2.powf(-0.5 * alpha) * (-c * x * x / a2 * t).exp()
        }
    };
    let band = Region::Band(n);
    Ok(match claim {
        "At" => (region_norm(radial, Region::Low, 1.0, 1.0, opts)?, 0.0, -1.0 - 0.5 * beta),
        "Axit-1" => (region_norm(xi_w, band, 1.0, 1.0, opts)?, beta + 2.0 - alpha, -0.5 * (1.0 + beta)),
        "Axit-2" => (region_norm(cut, Region::Low, 1.0, 1.0, opts)?, 0.0, -0.5 * (1.0 + beta)),
        "At-2" => (
            region_norm(radial, Region::Low, f64::INFINITY, 1.0, opts)?
                + region_norm(radial, Region::Low, 1.0, f64::INFINITY, opts)?,
            0.0,
            -0.5 * (1.0 + beta),
        ),
        "Axit-3" => (region_norm(xi_w, band, 1.0, f64::INFINITY, opts)?, beta + 1.0 - alpha, -0.5 * (1.0 + beta)),
        "Axit-4" => (region_norm(xi_w, band, f64::INFINITY, 1.0, opts)?, beta + 1.0 - alpha, -0.5 * beta),
        "Axit-5" => (region_norm(cut, Region::Low, f64::INFINITY, 1.0, opts)?, 0.0, -0.5 * beta),
        _ => return Err(Error::UnknownClaim(format!("quad:{claim}"))),
    })
}

/// Fit the constant and the late-time slope of one area-integral claim.
pub fn check_basic_quadrature(claim: &str, params: &QuadParams, times: &[f64]) -> Result<ScanResult> {
    if times.len() < 2 {
        return Err(Error::InvalidBudget("need at least two times".into()));
    }
    let base = QuadOptions::default();
    let fine = QuadOptions {
        panel_width: 0.5 * base.panel_width,
        angular_nodes: 2 * base.angular_nodes,
        ..base
    };
    let run = |opts: &QuadOptions| -> Result<(Worst, Vec<(f64, f64)>, f64)> {
        let vals = times
            .par_iter()
            .map(|&t| basic_quadrature_point(claim, params, t, opts).map(|v| (t, v)))
            .collect::<Result<Vec<_>>>()?;
        let mut w = Worst::default();
        let mut late = Vec::new();
        let mut target = 0.0;
        for (t, (lhs, npow, texp)) in vals {
            target = texp;
            let rhs = params.n.powf(npow) * jp(t).powf(texp);
            w.push(if lhs == 0.0 { 0.0 } else { lhs / rhs }, &[t]);
            if t >= 10.0 {
                late.push((t, lhs));
            }
        }
        Ok((w, late, target))
    };
    let (w0, late, target) = run(&base)?;
    let (w1, _, _) = run(&fine)?;
    let slope = if late.len() >= 2 {
        let (ts, vs): (Vec<f64>, Vec<f64>) = late.into_iter().unzip();
        fit_loglog(&ts, &vs).slope
    } else {
        f64::NAN
    };
    let slope_ok = (slope - target).abs() <= 0.1;
    let mut r = assemble(
        &format!("quad:{claim}"),
        3 * times.len(),
        w0,
        w1,
        &["t"],
        1e3,
        slope_ok,
        format!(
            "beta={}, beta'={}, alpha={}, N={}, c={}; slope fitted over t ≥ 10",
            params.beta, params.beta_prime, params.alpha, params.n, params.c
        ),
    );
    r.slope = Some(slope);
    r.target_slope = Some(target);
    Ok(r)
}

/// `{0} ∪ [10⁻², 10³]` with the fit window `[10, 10³]` well populated.
pub fn quadrature_times() -> Vec<f64> {
    let mut t = vec![0.0];
    t.extend(logspace(1e-2, 1.0, 5).into_iter().take(4));
    t.extend(logspace(1.0, 1e3, 13));
    t
}

// ---------------------------------------------------------------- projector derivative

/// A radial spectral density `ρ(A) = Σ wᵢ exp(−(ln A − mᵢ)²/(2σᵢ²))` placed
/// around the cut-off scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub centers: Vec<f64>,
    pub widths: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RadialProfile {
    fn random(rng: &mut ChaCha8Rng, ln_m: f64) -> Self {
        let k = rng.gen_range(1..=4);
        let mut p = RadialProfile { centers: vec![], widths: vec![], weights: vec![] };
        for _ in 0..k {
            p.centers.push(ln_m + rng.gen_range(-1.5..1.5));
            p.widths.push(log_uniform(rng, 0.05, 1.0));
            p.weights.push(rng.gen_range(0.1..1.0));
        }
        p
    }

    pub fn density(&self, a: f64) -> f64 {
        let l = a.ln();
        self.centers
            .iter()
            .zip(&self.widths)
            .zip(&self.weights)
            .map(|((m, s), w)| w * (-(l - m).powi(2) / (2.0 * s * s)).exp())
            .sum()
    }
}

/// `χ` with a transition of relative width `w` (the shipped projectors use
/// [`BUMP_WIDTH`]).
fn bump_w(r: f64, w: f64) -> f64 {
    if w == BUMP_WIDTH {
        bump(r)
    } else {
        bump(1.0 + (r.abs() - 1.0) * BUMP_WIDTH / w)
    }
}

fn jp_pow(s: f64, beta: f64) -> f64 {
    (1.0 + s * s).powf(0.5 * beta)
}

/// `∫ f(A)·ρ(A)·A dA` over the union of `[lo, hi]` intervals, Gauss on each.
fn radial_integral(f: impl Fn(f64) -> f64, breaks: &mut Vec<f64>, panels: usize) -> f64 {
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut s = 0.0;
    for w in breaks.windows(2) {
        for (x, wt) in composite(w[0], w[1], panels) {
            s += wt * f(x) * x;
        }
    }
    s
}

/// `(‖∂ₛP_{≤⟨s⟩^β}f‖₂, ⟨s⟩^{−1}‖P_{∼⟨s⟩^β}f‖₂)` for a radial spectral density;
/// `∂ₛ` by central differences in `s`.
pub fn projector_sides(p: &RadialProfile, beta: f64, s: f64, width: f64, panels: usize) -> (f64, f64) {
    let m = jp_pow(s, beta);
    let h = 1e-6 * s.max(1.0);
    let (mp, mm) = (jp_pow(s + h, beta), jp_pow(s - h, beta));
    let deriv = |a: f64| (bump_w(a / mp, width) - bump_w(a / mm, width)) / (2.0 * h);
    let (lo, hi) = (mp.min(mm), mp.max(mm));
    let mut br = vec![lo, m, hi, hi * (1.0 + width), m * (1.0 + width), lo * (1.0 + width)];
    let lhs2 = radial_integral(|a| deriv(a).powi(2) * p.density(a), &mut br, panels);
    // P_{∼M}: the annulus M/2 ≤ A ≤ 2M with both edges smoothed.
    let band = |a: f64| bump_w(a / (2.0 * m), width) - bump_w(2.0 * a / m, width);
    let mut br = vec![0.5 * m, 0.5 * m * (1.0 + width), m, m * (1.0 + width), 2.0 * m, 2.0 * m * (1.0 + width)];
    let rhs2 = radial_integral(|a| band(a).powi(2) * p.density(a), &mut br, panels);
    (lhs2.max(0.0).sqrt(), rhs2.sqrt() / s.hypot(1.0))
}

fn projector_worst(n: usize, seed: u64, width: f64, panels: usize) -> Worst {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s: Vec<(f64, f64, RadialProfile)> = (0..n)
        .map(|_| {
            let beta = rng.gen_range(-1.0..=1.0);
            let s = log_uniform(&mut rng, 1.0, 1e2);
            let ln_m = 0.5 * beta * (1.0 + s * s).ln();
            (beta, s, RadialProfile::random(&mut rng, ln_m))
        })
        .collect();
    par_worst(&s, |(beta, s, p)| {
        let (l, r) = projector_sides(p, *beta, *s, width, panels);
        (if l == 0.0 { 0.0 } else { l / r }, vec![*beta, *s])
    })
}

/// Time derivative of a moving low-pass projector against the band around
/// its cut-off, in L², for random radial spectra.
pub fn check_projector_derivative(samples: usize, seed: u64) -> Result<ScanResult> {
    check_projector_derivative_with(samples, seed, BUMP_WIDTH)
}

/// As [`check_projector_derivative`] with a bump of transition width `width`.
pub fn check_projector_derivative_with(samples: usize, seed: u64, width: f64) -> Result<ScanResult> {
    budget(samples)?;
    if !(width > 0.0 && width <= 1.0) {
        return Err(Error::InvalidBudget("bump width must lie in (0, 1]".into()));
    }
    Ok(assemble(
        "projector-derivative",
        3 * samples,
        projector_worst(samples, seed, width, 32),
        projector_worst(2 * samples, seed, width, 64),
        &["beta", "s"],
        10.0,
        true,
        format!("bump transition width {width:e}; the constant scales like width^(-1/2) in L²"),
    ))
}

// ---------------------------------------------------------------- anisotropic Nash

pub const NASH_GAMMA: f64 = 0.75;
pub const NASH_GAMMA_BAR: f64 = 1.0;

/// `(‖|∇|^γ̄⟨∇⟩ψ‖_∞, ‖⟨∇⟩⁴|∇|^γψ‖₂^{1/2}‖∇∂ₓψ‖₂^{1/2})`.
pub fn nash_sides(psi: &SpectralField, gamma: f64, gamma_bar: f64) -> Result<(f64, f64)> {
    let l = psi.scaled_by(|x, y| {
        let a = x.hypot(y);
        Weight::Homogeneous(gamma_bar).symbol(a) * Weight::Inhomogeneous(1.0).symbol(a)
    })?;
    let lhs = sobolev_norm(&l, Weight::Inhomogeneous(0.0), Lp::Inf)?;
    let r1 = psi
        .scaled_by(|x, y| {
            let a = x.hypot(y);
            Weight::Inhomogeneous(4.0).symbol(a) * Weight::Homogeneous(gamma).symbol(a)
        })?
        .l2_sq()
        .sqrt();
    let px = psi.dx();
    let r2 = (px.dx().l2_sq() + px.dy().l2_sq()).sqrt();
    Ok((lhs, (r1 * r2).sqrt()))
}

/// Random ψ: Gaussian coefficients under a Gaussian envelope of random width,
/// zero mean.
fn random_psi(grid: &Arc<FourierGrid>, rng: &mut ChaCha8Rng) -> SpectralField {
    let sigma = log_uniform(rng, 0.3, 3.0);
    let noise: Vec<f64> = (0..grid.len()).map(|_| StandardNormal.sample(rng)).collect();
    let f = SpectralField::from_physical(grid.clone(), &noise);
    let mut g = f
        .scaled_by(|x, y| (-(x * x + y * y) / (2.0 * sigma * sigma)).exp())
        .expect("bounded envelope");
    g.coeffs[0] = Complex64::new(0.0, 0.0);
    g
}

fn nash_worst(n: usize, seed: u64, grid: &Arc<FourierGrid>) -> Result<Worst> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = Worst::default();
    for i in 0..n {
        let psi = random_psi(grid, &mut rng);
        let (l, r) = nash_sides(&psi, NASH_GAMMA, NASH_GAMMA_BAR)?;
        w.push(if l == 0.0 { 0.0 } else { l / r }, &[i as f64]);
    }
    Ok(w)
}

/// Anisotropic Nash-type bound on a `16π` box for random band-limited ψ;
/// the refined pass doubles both the sample count and the resolution.
pub fn check_nash_anisotropic(samples: usize, seed: u64) -> Result<ScanResult> {
    budget(samples)?;
    let l = 16.0 * PI;
    let g0 = make_grid(128, 128, l, l)?;
    let g1 = make_grid(256, 256, l, l)?;
    Ok(assemble(
        "nash",
        3 * samples,
        nash_worst(samples, seed, &g0)?,
        nash_worst(2 * samples, seed, &g1)?,
        &["sample"],
        1e2,
        true,
        format!("gamma = {NASH_GAMMA}, gamma_bar = {NASH_GAMMA_BAR}, box 16π"),
    ))
}

// ---------------------------------------------------------------- oracle suites

fn oracle_claim(samples: usize, seed: u64) -> ScanResult {
    let times = [0.1, 1.0, 10.0];
    let r0 = oracle_test(samples, &times, 8.0, seed);
    let r1 = oracle_test(2 * samples, &times, 8.0, seed ^ 0x9e37_79b9);
    let w = |r: &crate::linear::OracleReport| Worst {
        ratio: r.max_rel_err,
        at: r.worst.map(|(t, x, y)| vec![t, x, y]).unwrap_or_default(),
    };
    let cap = 1e-8;
    let mut s = assemble(
        "oracle",
        3 * samples * times.len(),
        w(&r0),
        w(&r1),
        &["t", "xi", "eta"],
        cap,
        true,
        "closed-form semigroup against the matrix exponential, relative error".into(),
    );
    // an error near round-off has no meaningful refinement ratio
    s.refinement_stable = true;
    s.verdict = if s.max_ratio <= cap { Verdict::Pass } else { Verdict::Fail };
    s
}

fn charpoly_claim() -> ScanResult {
    let r0 = char_poly_scan(64, 8.0);
    let r1 = char_poly_scan(128, 8.0);
    let cap = 1e-10;
    let w = |r: f64| Worst { ratio: r, at: vec![] };
    let mut s = assemble(
        "charpoly",
        64 * 64 + 128 * 128,
        w(r0),
        w(r1),
        &[],
        cap,
        true,
        "characteristic polynomial residual scaled by 1 + A⁸ on [−8, 8]²".into(),
    );
    s.refinement_stable = true;
    s.verdict = if s.max_ratio <= cap { Verdict::Pass } else { Verdict::Fail };
    s
}

// ---------------------------------------------------------------- claims and reports

fn budget(samples: usize) -> Result<()> {
    if samples == 0 {
        Err(Error::InvalidBudget("sample budget must be positive".into()))
    } else {
        Ok(())
    }
}

/// A parsed claim id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Claim {
    Kernel(Estimate),
    Elem1,
    SinRatio,
    Quad(&'static str),
    ProjectorDerivative,
    Nash,
    Oracle,
    CharPoly,
}

impl Claim {
    pub fn id(&self) -> String {
        match self {
            Claim::Kernel(e) => format!("kernel:{}", e.id()),
            Claim::Elem1 => "elem1".into(),
            Claim::SinRatio => "sin-ratio".into(),
            Claim::Quad(c) => format!("quad:{c}"),
            Claim::ProjectorDerivative => "projector-derivative".into(),
            Claim::Nash => "nash".into(),
            Claim::Oracle => "oracle".into(),
            Claim::CharPoly => "charpoly".into(),
        }
    }

    pub fn all() -> Vec<Claim> {
        let mut v: Vec<Claim> = Estimate::ALL.iter().map(|e| Claim::Kernel(*e)).collect();
        v.extend([Claim::Elem1, Claim::SinRatio]);
        v.extend(QUAD_CLAIMS.iter().map(|c| Claim::Quad(c)));
        v.extend([Claim::ProjectorDerivative, Claim::Nash, Claim::Oracle, Claim::CharPoly]);
        v
    }
}

pub fn claim_ids() -> Vec<String> {
    Claim::all().iter().map(Claim::id).collect()
}

pub fn parse_claim(s: &str) -> Result<Claim> {
    let s = s.trim();
    Claim::all()
        .into_iter()
        .find(|c| c.id() == s)
        .ok_or_else(|| Error::UnknownClaim(s.to_string()))
}

/// Sample budgets for the randomized checkers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub elem1: usize,
    pub sin_ratio: usize,
    pub projector: usize,
    pub nash: usize,
    pub oracle: usize,
    pub kernel_level: u32,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            elem1: 200_000,
            sin_ratio: 200_000,
            projector: 2_000,
            nash: 100,
            oracle: 1_000,
            kernel_level: 0,
        }
    }
}

impl Budget {
    pub fn uniform(samples: usize) -> Self {
        Budget {
            elem1: samples,
            sin_ratio: samples,
            projector: samples,
            nash: samples,
            oracle: samples,
            kernel_level: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        for (n, v) in [
            ("elem1", self.elem1),
            ("sin_ratio", self.sin_ratio),
            ("projector", self.projector),
            ("nash", self.nash),
            ("oracle", self.oracle),
        ] {
            if v == 0 {
                return Err(Error::InvalidBudget(format!("{n}: sample budget must be positive")));
            }
        }
        if self.kernel_level > 3 {
            return Err(Error::InvalidBudget("kernel_level must be ≤ 3".into()));
        }
        Ok(())
    }
}

pub fn run_claim(claim: &Claim, b: &Budget, seed: u64) -> Result<ScanResult> {
    b.validate()?;
    match claim {
        Claim::Kernel(e) => scan_kernel_bounds(*e, &KernelGrid::at_level(b.kernel_level), C_DECAY),
        Claim::Elem1 => check_elem1(b.elem1, seed),
        Claim::SinRatio => check_sin_ratio(b.sin_ratio, seed),
        Claim::Quad(c) => check_basic_quadrature(c, &QuadParams::default_for(c)?, &quadrature_times()),
        Claim::ProjectorDerivative => check_projector_derivative(b.projector, seed),
        Claim::Nash => check_nash_anisotropic(b.nash, seed),
        Claim::Oracle => Ok(oracle_claim(b.oracle, seed)),
        Claim::CharPoly => Ok(charpoly_claim()),
    }
}

/// Machine-readable certification report, keyed and sorted by claim id.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub seed: u64,
    pub results: BTreeMap<String, ScanResult>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.results.values().all(|r| r.verdict == Verdict::Pass)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.results
            .iter()
            .filter(|(_, r)| r.verdict == Verdict::Fail)
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

/// Parse a report and check that every key names a known claim and matches
/// its entry.
pub fn parse_report(text: &str) -> Result<Report> {
    let r: Report = serde_json::from_str(text)?;
    for (k, v) in &r.results {
        parse_claim(k)?;
        if v.claim != *k {
            return Err(Error::UnknownClaim(format!("{k} holds an entry for {}", v.claim)));
        }
    }
    Ok(r)
}

/// Run every checker.
pub fn run_all(b: &Budget, seed: u64) -> Result<Report> {
    b.validate()?;
    let mut results = BTreeMap::new();
    for c in Claim::all() {
        results.insert(c.id(), run_claim(&c, b, seed)?);
    }
    Ok(Report { seed, results })
}

/// Recompute the ratio at a recorded worst location.
pub fn reevaluate(r: &ScanResult) -> Option<f64> {
    let w = &r.worst;
    let g = |k: &str| w.get(k).copied();
    match parse_claim(&r.claim).ok()? {
        Claim::Kernel(e) => Some(kernel_ratio(e, g("t")?, g("xi")?, g("eta")?, C_DECAY)),
        Claim::Elem1 => Some(elem1_ratio(g("b")?, g("c")?, g("t")?)),
        Claim::SinRatio => Some(sin_ratio(g("x")?, g("y")?)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sin_ratio_examples() {
        assert_eq!(sin_ratio(0.3, 0.3), 0.0);
        assert!(sin_ratio_lhs(PI, 2.0 * PI) < 1e-16);
        let r = sin_ratio(0.1, 0.2);
        assert!((r - 1.0 / 6.0).abs() < 2e-3, "{r}");
        let naive = ((0.05f64).sin() / 0.05 - (0.09f64).sin() / 0.09).abs();
        assert!((sin_ratio_lhs(0.05, 0.09) - naive).abs() < 1e-15);
    }

    #[test]
    fn elem1_limits() {
        // c → 0: the quotient tends to 2e^{−at}·∂_b g(b, t)·2
        let (a, b, t) = (0.5, -2.0, 1.3);
        let w = (-b as f64).sqrt();
        let dg = (t * (w * t).cos() / w - (w * t).sin() / (w * w)) / (2.0 * w);
        let want = 4.0 * (-a as f64 * t).exp() * dg * -1.0;
        let got = elem1_lhs(a, b, 1e-9, t);
        assert!((got - want).abs() < 1e-7 * want.abs(), "{got} {want}");
        assert!(elem1_lhs(10.0, 1.0, 0.5, 10.0).abs() < 1e-30);
        assert!(elem1_ratio(1.0, 0.5, 10.0).is_finite());
        // ratio equals lhs/rhs where both are representable
        let (a, b, c, t) = (2.0, 1.0, 0.5, 0.7);
        let r = elem1_lhs(a, b, c, t).abs() / elem1_rhs(a, b, c, t);
        assert!((r - elem1_ratio(b, c, t)).abs() < 1e-12 * r);
    }

    #[test]
    fn kernel_t0_row_is_zero() {
        for which in [Estimate::K, Estimate::Kt, Estimate::Comp] {
            assert_eq!(kernel_ratio(which, 0.0, 0.3, 0.4, C_DECAY), 0.0);
        }
        let r = kernel_ratio(Estimate::K, 10.0, 1e3 * 0.6, 1e3 * 0.8, C_DECAY);
        assert!(r.is_finite());
    }

    #[test]
    fn nash_single_mode() {
        let g = make_grid(16, 16, 2.0 * PI, 2.0 * PI).unwrap();
        let psi = SpectralField::from_fn(g, |x, y| (x + y).cos());
        let (l, r) = nash_sides(&psi, 0.75, 1.0).unwrap();
        let want_l = 2f64.sqrt() * 3f64.sqrt();
        let norm = PI * 2f64.sqrt();
        let want_r = (9.0 * 2f64.powf(0.375) * norm * 2f64.sqrt() * norm).sqrt();
        assert!((l - want_l).abs() < 1e-12, "{l}");
        assert!((r - want_r).abs() < 1e-10 * want_r, "{r} {want_r}");
        let z = SpectralField::zeros(psi.grid().clone());
        assert_eq!(nash_sides(&z, 0.75, 1.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn projector_beta_zero_and_far_support() {
        let p = RadialProfile { centers: vec![0.0], widths: vec![0.3], weights: vec![1.0] };
        let (l, r) = projector_sides(&p, 0.0, 5.0, BUMP_WIDTH, 16);
        assert_eq!(l, 0.0);
        assert!(r > 0.0);
        let far = RadialProfile { centers: vec![40.0], widths: vec![0.05], weights: vec![1.0] };
        let (l, r) = projector_sides(&far, 0.5, 5.0, BUMP_WIDTH, 16);
        assert_eq!((l, r), (0.0, 0.0));
    }

    #[test]
    fn claims_parse() {
        for id in claim_ids() {
            assert_eq!(parse_claim(&id).unwrap().id(), id);
        }
        assert!(matches!(parse_claim("kernel:9"), Err(Error::UnknownClaim(_))));
        assert!(matches!(check_elem1(0, 1), Err(Error::InvalidBudget(_))));
        assert!(matches!(run_all(&Budget::uniform(0), 1), Err(Error::InvalidBudget(_))));
    }
}
