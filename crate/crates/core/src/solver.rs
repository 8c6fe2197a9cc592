//! Pseudo-spectral ETDRK2 integrator for the perturbation system
//!
//! ```text
//! ∂ₜn + ∂ₓu + ∂_yv = N₀
//! ∂ₜu − Δu − λ(∂ₓₓu + ∂ₓ_yv) + ∂ₓn = N₁
//! ∂ₜv − Δv − λ(∂ₓ_yu + ∂_yyv) + ∂_yn + Δψ = N₂
//! ∂ₜψ + v = N₃
//! ```
//!
//! The linear part, `λ` included by default, is propagated exactly per mode.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::{
    energy, make_grid, x0_norm, x_norm_snapshot, FourierGrid, PerturbationState, SpectralField,
    XNormBreakdown, XParams,
};
use crate::linear::{phi_functions, symbol_matrix, Mat4};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest admissible `max|n|` before `ρ = 1 + n` is considered collapsed.
pub const DENSITY_GUARD: f64 = 0.99;
/// Growth factor of a field norm in one step that rejects the step.
pub const GROWTH_LIMIT: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    /// Four offset Gaussian bumps of unit width.
    Gaussian,
    /// Filtered white noise with a Gaussian spectrum.
    Random,
}

fn default_dealias() -> f64 {
    2.0 / 3.0
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub nx: usize,
    pub ny: usize,
    #[serde(rename = "Lx")]
    pub lx: f64,
    #[serde(rename = "Ly")]
    pub ly: f64,
    pub lambda: f64,
    pub delta: f64,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(default = "default_dealias")]
    pub dealias: f64,
    #[serde(default)]
    pub seed: u64,
    pub init: InitKind,
    #[serde(default)]
    pub x_params: XParams,
    /// Time between recorded diagnostics.
    pub cadence: f64,
    /// Time between field checkpoints; the final state is always written.
    #[serde(default)]
    pub checkpoint_every: Option<f64>,
    /// Put `λ` in the exact linear propagator (default) rather than in `N₁, N₂`.
    #[serde(default = "yes")]
    pub lambda_in_linear: bool,
    /// Switch the nonlinear terms off, leaving the exact linear flow.
    #[serde(default = "yes")]
    pub nonlinear: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            nx: 256,
            ny: 256,
            lx: 64.0 * PI,
            ly: 64.0 * PI,
            lambda: 0.05,
            delta: 1e-3,
            dt: 0.05,
            t_final: 100.0,
            dealias: default_dealias(),
            seed: 0,
            init: InitKind::Gaussian,
            x_params: XParams::default(),
            cadence: 1.0,
            checkpoint_every: None,
            lambda_in_linear: true,
            nonlinear: true,
        }
    }
}

impl SolverConfig {
    /// Every violated constraint, one per line, each naming its field.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                v.push(msg.to_string());
            }
        };
        need(self.nx >= 4 && self.nx.is_multiple_of(2), "nx: must be even and at least 4");
        need(self.ny >= 4 && self.ny.is_multiple_of(2), "ny: must be even and at least 4");
        need(self.lx > 0.0 && self.lx.is_finite(), "Lx: must be positive");
        need(self.ly > 0.0 && self.ly.is_finite(), "Ly: must be positive");
        need(self.lambda.abs() < 1.0, "lambda: |lambda| must be < 1");
        need(self.delta >= 0.0 && self.delta.is_finite(), "delta: must be nonnegative");
        need(self.dt > 0.0 && self.dt.is_finite(), "dt: must be positive");
        need(self.t_final >= 0.0 && self.t_final.is_finite(), "T: must be nonnegative");
        need(self.dealias > 0.0 && self.dealias <= 1.0, "dealias: must lie in (0, 1]");
        need(self.cadence > 0.0 && self.cadence.is_finite(), "cadence: must be positive");
        need(
            self.checkpoint_every.is_none_or(|c| c > 0.0 && c.is_finite()),
            "checkpoint_every: must be positive",
        );
        if self.x_params.validate().is_err() {
            v.push("x_params: need M ≥ 8, eps > 0, 1/2 < gamma ≤ 1, gamma/2 < gamma_bar < 1 + gamma/2".into());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v.join("; ")))
        }
    }

    pub fn grid(&self) -> Result<Arc<FourierGrid>> {
        make_grid(self.nx, self.ny, self.lx, self.ly)
    }

    /// Whole number of steps of size `dt` per cadence interval.
    fn steps_per(&self, interval: f64) -> usize {
        ((interval / self.dt).round() as usize).max(1)
    }
}

/// `true` where a mode survives truncation to the given fraction of each axis' Nyquist
/// wavenumber; the Nyquist modes themselves are always dropped.
pub fn dealias_mask(grid: &FourierGrid, fraction: f64) -> Vec<bool> {
    let (kx, ky) = grid.dealias_cutoff(fraction);
    let mut m = vec![false; grid.len()];
    for l in 0..grid.ny {
        for k in 0..grid.nx {
            let keep = k != grid.nx / 2
                && l != grid.ny / 2
                && grid.xi[k].abs() <= kx * (1.0 + 1e-12)
                && grid.eta[l].abs() <= ky * (1.0 + 1e-12);
            m[grid.index(k, l)] = keep;
        }
    }
    m
}

fn masked(f: &SpectralField, mask: &[bool]) -> SpectralField {
    let c = f
        .coeffs
        .iter()
        .zip(mask)
        .map(|(z, &k)| if k { *z } else { ZERO })
        .collect();
    SpectralField::from_coeffs(f.grid().clone(), c)
}

fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / s).exp();
        a / (a + (-1.0 / (1.0 - s)).exp())
    }
}

/// Smooth low-pass equal to 1 below `0.75·kc` and 0 above `kc`, `kc` a third of the
/// smaller Nyquist wavenumber.
pub fn band_limit(f: &SpectralField) -> SpectralField {
    let g = f.grid();
    let kc = (PI * g.nx as f64 / g.lx).min(PI * g.ny as f64 / g.ly) / 3.0;
    f.scaled_by(|x, y| smooth_step((kc - x.hypot(y)) / (0.25 * kc)))
        .expect("bounded symbol")
}

fn gaussian_bump(g: &Arc<FourierGrid>, cx: f64, cy: f64, w: f64) -> SpectralField {
    SpectralField::from_fn(g.clone(), |x, y| {
        let dx = x - cx;
        let dy = y - cy;
        (-(dx * dx + dy * dy) / (2.0 * w * w)).exp()
    })
}

/// Initial perturbation scaled so that its discrete `X₀` norm equals `delta`.
pub fn initial_data(kind: InitKind, grid: &Arc<FourierGrid>, delta: f64, seed: u64) -> Result<PerturbationState> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidConfig(format!("delta: {delta}")));
    }
    if delta == 0.0 {
        return Ok(PerturbationState::zeros(grid.clone()));
    }
    let (cx, cy) = (0.5 * grid.lx, 0.5 * grid.ly);
    let raw = match kind {
        InitKind::Gaussian => {
            let w = 1.0;
            PerturbationState::from_fields([
                gaussian_bump(grid, cx, cy, w),
                gaussian_bump(grid, cx + 1.0, cy - 0.5, w).scale(0.7),
                gaussian_bump(grid, cx - 0.5, cy + 1.0, w).scale(-0.4),
                gaussian_bump(grid, cx + 0.5, cy + 0.5, w).scale(0.5),
            ])
        }
        InitKind::Random => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut noise = || {
                let v: Vec<f64> = (0..grid.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
                SpectralField::from_physical(grid.clone(), &v)
                    .scaled_by(|x, y| (-(x * x + y * y) / (2.0 * 0.25)).exp())
                    .expect("bounded symbol")
            };
            PerturbationState::from_fields([noise(), noise(), noise(), noise()])
        }
    };
    let shaped = raw.map(band_limit);
    let x0 = x0_norm(&shaped, 8.0)?;
    Ok(shaped.map(|f| f.scale(delta / x0)))
}

/// `(b₁, b₂) = (∂_yψ + 1, −∂ₓψ)`.
pub fn reconstruct_b(psi: &SpectralField) -> (SpectralField, SpectralField) {
    let mut b1 = psi.dy();
    b1.coeffs[0] += Complex64::new(psi.grid().area(), 0.0);
    (b1, psi.dx().scale(-1.0))
}

/// Nonlinear right-hand side. `linear_lambda` adds `λ(∂ₓₓu + ∂ₓ_yv)` and
/// `λ(∂ₓ_yu + ∂_yyv)` to `N₁, N₂`, for runs that keep `λ` out of the propagator.
pub fn nonlinear_terms_with(
    state: &PerturbationState,
    lambda: f64,
    linear_lambda: bool,
    dealias: f64,
) -> Result<[SpectralField; 4]> {
    let g = state.grid().clone();
    let mask = dealias_mask(&g, dealias);
    let s = state.map(|f| masked(f, &mask));
    let n = s.n.to_physical();
    let nmax = n.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if nmax >= DENSITY_GUARD {
        return Err(Error::DensityCollapse(nmax));
    }
    let fields: Vec<SpectralField> = vec![
        s.u.clone(),
        s.v.clone(),
        s.n.dx(),
        s.n.dy(),
        s.u.dx(),
        s.u.dy(),
        s.v.dx(),
        s.v.dy(),
        s.psi.dx(),
        s.psi.dy(),
        s.psi.laplacian(),
        s.u.laplacian(),
        s.v.laplacian(),
        s.u.dx().dx().add(&s.v.dx().dy()),
        s.u.dx().dy().add(&s.v.dy().dy()),
    ];
    let p: Vec<Vec<f64>> = fields.par_iter().map(|f| f.to_physical()).collect();
    let [u, v, nx, ny, ux, uy, vx, vy, px, py, lp, lu, lv, du, dv] = [
        &p[0], &p[1], &p[2], &p[3], &p[4], &p[5], &p[6], &p[7], &p[8], &p[9], &p[10], &p[11], &p[12],
        &p[13], &p[14],
    ];
    let len = g.len();
    let mut nu = vec![0.0; len];
    let mut nv = vec![0.0; len];
    let mut r1 = vec![0.0; len];
    let mut r2 = vec![0.0; len];
    let mut r3 = vec![0.0; len];
    for i in 0..len {
        let rho = 1.0 + n[i];
        nu[i] = n[i] * u[i];
        nv[i] = n[i] * v[i];
        r1[i] = -(u[i] * ux[i] + v[i] * uy[i])
            - (n[i] * lu[i] + n[i] * lambda * du[i]) / rho
            - px[i] * lp[i] / rho
            - n[i] * nx[i];
        r2[i] = -(u[i] * vx[i] + v[i] * vy[i])
            - (n[i] * lv[i] + n[i] * lambda * dv[i] - n[i] * lp[i]) / rho
            - py[i] * lp[i] / rho
            - n[i] * ny[i];
        r3[i] = -u[i] * px[i] - v[i] * py[i];
    }
    let fwd = |v: &[f64]| masked(&SpectralField::from_physical(g.clone(), v), &mask);
    let n0 = fwd(&nu).dx().add(&fwd(&nv).dy()).scale(-1.0);
    let mut n1 = fwd(&r1);
    let mut n2 = fwd(&r2);
    let n3 = fwd(&r3);
    if linear_lambda && lambda != 0.0 {
        n1 = n1.add(&masked(&fields[13], &mask).scale(lambda));
        n2 = n2.add(&masked(&fields[14], &mask).scale(lambda));
    }
    Ok([masked(&n0, &mask), n1, n2, n3])
}

/// `N₀…N₃` with `λ` inside the nonlinearity only through its `n/ρ` factors.
pub fn nonlinear_terms(state: &PerturbationState, lambda: f64) -> Result<[SpectralField; 4]> {
    nonlinear_terms_with(state, lambda, false, default_dealias())
}

/// Per-mode `(e^{hL}, hφ₁(hL), hφ₂(hL))` for the modes kept by the mask.
pub struct EtdCoefficients {
    pub dt: f64,
    pub lambda: f64,
    modes: Vec<usize>,
    mats: Vec<[Mat4; 3]>,
}

impl EtdCoefficients {
    pub fn new(grid: &FourierGrid, dt: f64, lambda: f64, mask: &[bool]) -> Result<Self> {
        let modes: Vec<usize> = (0..grid.len()).filter(|&i| mask[i]).collect();
        let mats = modes
            .par_iter()
            .map(|&i| {
                let (k, l) = (i % grid.nx, i / grid.nx);
                let m = symbol_matrix(grid.xi[k], grid.eta[l], lambda).to_cmat();
                let (e, p1, p2) = phi_functions(&m, dt)?;
                Ok([e.to_rows(), p1.to_rows(), p2.to_rows()])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EtdCoefficients {
            dt,
            lambda,
            modes,
            mats,
        })
    }

    /// `Σⱼ Mⱼ·xⱼ` modewise, `Mⱼ` selected from the per-mode triple by `which[j]`.
    fn combine(&self, grid: &Arc<FourierGrid>, parts: &[(usize, &[&Vec<Complex64>; 4])]) -> PerturbationState {
        let out: Vec<[Complex64; 4]> = self
            .modes
            .par_iter()
            .zip(&self.mats)
            .map(|(&i, mats)| {
                let mut acc = [ZERO; 4];
                for &(which, src) in parts {
                    let m = &mats[which];
                    let x = [src[0][i], src[1][i], src[2][i], src[3][i]];
                    for r in 0..4 {
                        acc[r] += m[r][0] * x[0] + m[r][1] * x[1] + m[r][2] * x[2] + m[r][3] * x[3];
                    }
                }
                acc
            })
            .collect();
        let mut f = [
            vec![ZERO; grid.len()],
            vec![ZERO; grid.len()],
            vec![ZERO; grid.len()],
            vec![ZERO; grid.len()],
        ];
        for (&i, v) in self.modes.iter().zip(&out) {
            for c in 0..4 {
                f[c][i] = v[c];
            }
        }
        let [a, b, c, d] = f;
        PerturbationState::from_fields([
            SpectralField::from_coeffs(grid.clone(), a),
            SpectralField::from_coeffs(grid.clone(), b),
            SpectralField::from_coeffs(grid.clone(), c),
            SpectralField::from_coeffs(grid.clone(), d),
        ])
    }
}

fn coeff_refs(s: &PerturbationState) -> [&Vec<Complex64>; 4] {
    [&s.n.coeffs, &s.u.coeffs, &s.v.coeffs, &s.psi.coeffs]
}

/// A configured stepper: propagator coefficients plus the nonlinearity switches.
pub struct Stepper {
    pub coeffs: EtdCoefficients,
    pub lambda: f64,
    pub dealias: f64,
    pub nonlinear: bool,
    pub lambda_in_linear: bool,
}

impl Stepper {
    pub fn new(grid: &FourierGrid, dt: f64, lambda: f64, dealias: f64, nonlinear: bool, lambda_in_linear: bool) -> Result<Self> {
        let mask = dealias_mask(grid, dealias);
        let lin_lambda = if lambda_in_linear { lambda } else { 0.0 };
        Ok(Stepper {
            coeffs: EtdCoefficients::new(grid, dt, lin_lambda, &mask)?,
            lambda,
            dealias,
            nonlinear,
            lambda_in_linear,
        })
    }

    pub fn from_config(c: &SolverConfig, grid: &FourierGrid) -> Result<Self> {
        Self::new(grid, c.dt, c.lambda, c.dealias, c.nonlinear, c.lambda_in_linear)
    }

    fn rhs(&self, s: &PerturbationState) -> Result<PerturbationState> {
        if !self.nonlinear && self.lambda_in_linear {
            return Ok(PerturbationState::zeros(s.grid().clone()));
        }
        let [a, b, c, d] = if self.nonlinear {
            nonlinear_terms_with(s, self.lambda, !self.lambda_in_linear, self.dealias)?
        } else {
            let mask = dealias_mask(s.grid(), self.dealias);
            let du = s.u.dx().dx().add(&s.v.dx().dy()).scale(self.lambda);
            let dv = s.u.dx().dy().add(&s.v.dy().dy()).scale(self.lambda);
            let z = SpectralField::zeros(s.grid().clone());
            [z.clone(), masked(&du, &mask), masked(&dv, &mask), z]
        };
        Ok(PerturbationState::from_fields([a, b, c, d]))
    }

    /// One ETDRK2 step: `a = e^{hL}u + hφ₁N(u)`, `u⁺ = a + hφ₂(N(a) − N(u))`.
    pub fn step(&self, s: &PerturbationState, t: f64) -> Result<PerturbationState> {
        let g = s.grid().clone();
        let nu = self.rhs(s)?;
        let a = self.coeffs.combine(&g, &[(0, &coeff_refs(s)), (1, &coeff_refs(&nu))]);
        let next = if !self.nonlinear && self.lambda_in_linear {
            a
        } else {
            let na = self.rhs(&a)?;
            let diff = na.sub(&nu);
            let corr = self.coeffs.combine(&g, &[(2, &coeff_refs(&diff))]);
            a.add(&corr)
        };
        for (name, (old, new)) in ["n", "u", "v", "psi"].iter().zip(s.fields().iter().zip(next.fields())) {
            let (from, to) = (old.l2_sq().sqrt(), new.l2_sq().sqrt());
            if !to.is_finite() || (from > 0.0 && to > GROWTH_LIMIT * from) {
                return Err(Error::StepRejected {
                    t,
                    field: name,
                    from,
                    to,
                });
            }
        }
        Ok(next)
    }
}

/// `step_etd` with a fresh propagator; prefer [`Stepper`] inside loops.
pub fn step_etd(state: &PerturbationState, dt: f64, lambda: f64) -> Result<PerturbationState> {
    Stepper::new(state.grid(), dt, lambda, default_dealias(), true, true)?.step(state, 0.0)
}

/// Diagnostics of one run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub x_norms: Vec<XNormBreakdown>,
    /// `∫n dx dy`
    pub mass: Vec<f64>,
    /// `‖⟨∇⟩^M(n, u, ∇ψ)‖₂`
    pub energy: Vec<f64>,
    /// `max|n|`, also the density-floor monitor.
    pub max_n: Vec<f64>,
    /// `max|(u, v)|`
    pub sup_u: Vec<f64>,
    /// `max|∇ψ|`
    pub sup_grad_psi: Vec<f64>,
    pub steps: usize,
    pub aborted: Option<String>,
}

fn sup_euclid(fs: &[&SpectralField]) -> f64 {
    let p: Vec<Vec<f64>> = fs.iter().map(|f| f.to_physical()).collect();
    (0..p[0].len())
        .map(|i| p.iter().map(|v| v[i] * v[i]).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

impl TrajectoryRecord {
    fn push(&mut self, s: &PerturbationState, t: f64, p: XParams) -> Result<()> {
        self.times.push(t);
        self.x_norms.push(x_norm_snapshot(s, t, p)?);
        self.mass.push(s.n.mean_mode().re);
        self.energy.push(energy(s, p.m)?);
        self.max_n.push(sup_euclid(&[&s.n]));
        self.sup_u.push(sup_euclid(&[&s.u, &s.v]));
        self.sup_grad_psi.push(sup_euclid(&[&s.psi.dx(), &s.psi.dy()]));
        Ok(())
    }

    /// Largest `|mass(t) − mass(0)| / |mass(0)|`.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.mass.first().copied().unwrap_or(0.0);
        let d = self.mass.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max);
        if m0 == 0.0 {
            d
        } else {
            d / m0.abs()
        }
    }

    pub fn csv_header() -> String {
        let mut h = vec!["t", "mass", "energy", "max_n", "sup_u", "sup_grad_psi"];
        h.extend(crate::grid::X_KEYS);
        h.join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut out = Self::csv_header();
        out.push('\n');
        for i in 0..self.times.len() {
            let mut row = vec![
                self.times[i],
                self.mass[i],
                self.energy[i],
                self.max_n[i],
                self.sup_u[i],
                self.sup_grad_psi[i],
            ];
            row.extend(crate::grid::X_KEYS.iter().map(|k| self.x_norms[i].entries[*k]));
            out.push_str(&crate::io::csv_row(&row));
            out.push('\n');
        }
        out
    }
}

/// Called at every recorded time and at every checkpoint.
pub trait Observer {
    fn record(&mut self, _t: f64, _state: &PerturbationState) -> Result<()> {
        Ok(())
    }
    fn checkpoint(&mut self, _t: f64, _state: &PerturbationState) -> Result<()> {
        Ok(())
    }
}

impl Observer for () {}

/// Integrate from the configured initial data. On density collapse or a rejected
/// step the record so far is returned together with the error.
pub fn run(
    config: &SolverConfig,
    initial: Option<PerturbationState>,
    obs: &mut dyn Observer,
) -> (TrajectoryRecord, PerturbationState, Option<Error>) {
    let mut rec = TrajectoryRecord::default();
    let setup = || -> Result<(PerturbationState, Stepper)> {
        config.validate()?;
        let g = config.grid()?;
        let s0 = match initial.clone() {
            Some(s) => s,
            None => initial_data(config.init, &g, config.delta, config.seed)?,
        };
        Ok((s0, Stepper::from_config(config, &g)?))
    };
    let (mut s, stepper) = match setup() {
        Ok(v) => v,
        Err(e) => {
            let g = make_grid(4, 4, 1.0, 1.0).expect("valid");
            return (rec, PerturbationState::zeros(g), Some(e));
        }
    };
    let per_out = config.steps_per(config.cadence);
    let per_ck = config.checkpoint_every.map(|c| config.steps_per(c));
    let total = (config.t_final / config.dt).round() as usize;
    let fail = |rec: &mut TrajectoryRecord, e: Error| {
        rec.aborted = Some(e.to_string());
        Some(e)
    };
    if let Err(e) = rec.push(&s, 0.0, config.x_params).and_then(|_| obs.record(0.0, &s)) {
        let err = fail(&mut rec, e);
        return (rec, s, err);
    }
    for k in 1..=total {
        let t = k as f64 * config.dt;
        match stepper.step(&s, t - config.dt) {
            Ok(n) => s = n,
            Err(e) => {
                let err = fail(&mut rec, e);
                return (rec, s, err);
            }
        }
        rec.steps = k;
        let res = (|| {
            if k % per_out == 0 || k == total {
                rec.push(&s, t, config.x_params)?;
                obs.record(t, &s)?;
            }
            if per_ck.is_some_and(|p| k % p == 0) && k != total {
                obs.checkpoint(t, &s)?;
            }
            Ok(())
        })();
        if let Err(e) = res {
            let err = fail(&mut rec, e);
            return (rec, s, err);
        }
    }
    let t = total as f64 * config.dt;
    if let Err(e) = obs.checkpoint(t, &s) {
        let err = fail(&mut rec, e);
        return (rec, s, err);
    }
    (rec, s, None)
}

pub fn simulate(config: &SolverConfig) -> Result<TrajectoryRecord> {
    match run(config, None, &mut ()) {
        (r, _, None) => Ok(r),
        (_, _, Some(e)) => Err(e),
    }
}

/// Writes checkpoints into a directory.
pub struct DirObserver<'a> {
    pub dir: &'a Path,
    pub written: Vec<String>,
}

impl Observer for DirObserver<'_> {
    fn checkpoint(&mut self, t: f64, state: &PerturbationState) -> Result<()> {
        let names = crate::io::write_state(self.dir, state, t)?;
        self.written.extend(names);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Arc<FourierGrid> {
        make_grid(16, 16, 2.0 * PI, 2.0 * PI).unwrap()
    }

    #[test]
    fn zero_state_terms_vanish() {
        let s = PerturbationState::zeros(small());
        for f in nonlinear_terms(&s, 0.3).unwrap() {
            assert!(f.coeffs.iter().all(|z| *z == ZERO));
        }
    }

    #[test]
    fn single_transport_term() {
        let g = small();
        let mut s = PerturbationState::zeros(g.clone());
        s.u = SpectralField::from_fn(g.clone(), |x, _| x.cos());
        let [n0, n1, n2, n3] = nonlinear_terms(&s, 0.0).unwrap();
        // aliasing-free: sin 2x survives the 2/3 rule on 16 points (|k| = 2 ≤ 16/3)
        let want = SpectralField::from_fn(g, |x, _| 0.5 * (2.0 * x).sin());
        assert!(n1.sub(&want).coeffs.iter().all(|z| z.norm() < 1e-12));
        for f in [n0, n2, n3] {
            assert!(f.coeffs.iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn constant_velocity_does_not_transport_y_potential() {
        let g = small();
        let mut s = PerturbationState::zeros(g.clone());
        s.u = SpectralField::from_fn(g.clone(), |_, _| 1.0);
        s.psi = SpectralField::from_fn(g, |_, y| y.cos());
        let n3 = &nonlinear_terms(&s, 0.0).unwrap()[3];
        assert!(n3.coeffs.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn density_guard() {
        let g = small();
        let mut s = PerturbationState::zeros(g.clone());
        s.n = SpectralField::from_fn(g, |x, _| -0.995 * (0.5 * (1.0 + x.cos())));
        assert!(matches!(nonlinear_terms(&s, 0.0), Err(Error::DensityCollapse(_))));
    }

    #[test]
    fn b_field_examples() {
        let g = small();
        let (b1, b2) = reconstruct_b(&SpectralField::zeros(g.clone()));
        let p1 = b1.to_physical();
        assert!(p1.iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(b2.coeffs.iter().all(|z| *z == ZERO));
        let psi = SpectralField::from_fn(g.clone(), |x, _| x.cos());
        let (b1, b2) = reconstruct_b(&psi);
        let div = b1.dx().add(&b2.dy());
        assert!(div.coeffs.iter().all(|z| z.norm() <= 1e-14));
        let p2 = b2.to_physical();
        for l in 0..16 {
            for j in 0..16 {
                let (x, _) = g.point(j, l);
                assert!((p2[l * 16 + j] - x.sin()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn config_errors_name_the_field() {
        let c = SolverConfig {
            lambda: 1.0,
            ..SolverConfig::default()
        };
        let e = c.validate().unwrap_err().to_string();
        assert!(e.contains("lambda"), "{e}");
    }

    #[test]
    fn zero_delta_gives_zero_state() {
        let s = initial_data(InitKind::Random, &small(), 0.0, 3).unwrap();
        assert_eq!(s.max_abs(), 0.0);
    }

    #[test]
    fn initial_data_normalized() {
        let g = make_grid(32, 32, 8.0 * PI, 8.0 * PI).unwrap();
        for kind in [InitKind::Gaussian, InitKind::Random] {
            let s = initial_data(kind, &g, 1e-3, 11).unwrap();
            assert!((x0_norm(&s, 8.0).unwrap() - 1e-3).abs() < 1e-15);
            assert!(s.n.hermitian_defect() < 1e-12);
        }
    }
}
