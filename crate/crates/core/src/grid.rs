//! Periodic Fourier grids, fields, multipliers, Littlewood–Paley projectors and
//! the norms of the working space.
//!
//! The transform pair approximates the continuum Fourier transform:
//! `f̂(k) = Σ f(x) e^{−ik·x} ΔxΔy` and `f(x) = (LxLy)⁻¹ Σ f̂(k) e^{ik·x}`,
//! so symbols written for ℝ² apply verbatim.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::stats::{kahan_sum, Kahan};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ROW_BATCH: usize = 16;

pub struct FourierGrid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    /// `2πk/Lx` in FFT order: `0, 1, …, nx/2−1, −nx/2, …, −1`.
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    fx: (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>),
    fy: (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>),
}

impl fmt::Debug for FourierGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FourierGrid")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("lx", &self.lx)
            .field("ly", &self.ly)
            .finish()
    }
}

impl PartialEq for FourierGrid {
    fn eq(&self, o: &Self) -> bool {
        self.nx == o.nx && self.ny == o.ny && self.lx == o.lx && self.ly == o.ly
    }
}

fn wavenumbers(n: usize, l: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let m = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
            2.0 * PI * m / l
        })
        .collect()
}

pub fn make_grid(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Arc<FourierGrid>> {
    if nx < 4 || ny < 4 || nx % 2 == 1 || ny % 2 == 1 {
        return Err(Error::InvalidDimension(format!(
            "nx = {nx}, ny = {ny}; both must be even and at least 4"
        )));
    }
    if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
        return Err(Error::InvalidDimension(format!("Lx = {lx}, Ly = {ly}")));
    }
    let mut p = FftPlanner::new();
    Ok(Arc::new(FourierGrid {
        nx,
        ny,
        lx,
        ly,
        xi: wavenumbers(nx, lx),
        eta: wavenumbers(ny, ly),
        fx: (p.plan_fft_forward(nx), p.plan_fft_inverse(nx)),
        fy: (p.plan_fft_forward(ny), p.plan_fft_inverse(ny)),
    }))
}

impl FourierGrid {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, k: usize, l: usize) -> usize {
        l * self.nx + k
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn a(&self, k: usize, l: usize) -> f64 {
        self.xi[k].hypot(self.eta[l])
    }

    /// Index of the mode `(−k, −l)`.
    pub fn mirror(&self, k: usize, l: usize) -> (usize, usize) {
        ((self.nx - k) % self.nx, (self.ny - l) % self.ny)
    }

    /// Physical coordinates of node `(j, l)`.
    pub fn point(&self, j: usize, l: usize) -> (f64, f64) {
        (j as f64 * self.dx(), l as f64 * self.dy())
    }

    /// Largest wavenumber kept by the 2/3 rule along each axis.
    pub fn dealias_cutoff(&self, fraction: f64) -> (f64, f64) {
        (
            fraction * PI * self.nx as f64 / self.lx,
            fraction * PI * self.ny as f64 / self.ly,
        )
    }

    /// In-place 2D transform; `inverse` selects the `+i` sign. No scaling.
    fn fft2(&self, data: &mut [Complex64], inverse: bool) {
        let (nx, ny) = (self.nx, self.ny);
        let fx = if inverse { &self.fx.1 } else { &self.fx.0 };
        let fy = if inverse { &self.fy.1 } else { &self.fy.0 };
        // batches of rows share one scratch allocation inside rustfft
        data.par_chunks_mut(nx * ROW_BATCH).for_each(|rows| fx.process(rows));
        let mut t = vec![ZERO; nx * ny];
        t.par_chunks_mut(ny * ROW_BATCH).enumerate().for_each(|(b, cols)| {
            for (j, col) in cols.chunks_mut(ny).enumerate() {
                let k = b * ROW_BATCH + j;
                for (l, c) in col.iter_mut().enumerate() {
                    *c = data[l * nx + k];
                }
            }
            fy.process(cols);
        });
        data.par_chunks_mut(nx).enumerate().for_each(|(l, row)| {
            for (k, c) in row.iter_mut().enumerate() {
                *c = t[k * ny + l];
            }
        });
    }
}

/// One scalar unknown as continuum-normalized Fourier coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Arc<FourierGrid>,
    pub coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Arc<FourierGrid>) -> Self {
        let n = grid.len();
        SpectralField {
            grid,
            coeffs: vec![ZERO; n],
        }
    }

    pub fn from_coeffs(grid: Arc<FourierGrid>, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), grid.len());
        SpectralField { grid, coeffs }
    }

    /// Forward transform of physical values (row-major, x fastest).
    pub fn from_physical(grid: Arc<FourierGrid>, values: &[f64]) -> Self {
        assert_eq!(values.len(), grid.len());
        let mut c: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        grid.fft2(&mut c, false);
        let w = grid.dx() * grid.dy();
        c.iter_mut().for_each(|z| *z *= w);
        SpectralField { grid, coeffs: c }
    }

    /// Sample a function of `(x, y)` on the grid and transform.
    pub fn from_fn(grid: Arc<FourierGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut v = vec![0.0; grid.len()];
        for l in 0..grid.ny {
            for j in 0..grid.nx {
                let (x, y) = grid.point(j, l);
                v[l * grid.nx + j] = f(x, y);
            }
        }
        Self::from_physical(grid, &v)
    }

    /// Real part of the inverse transform.
    pub fn to_physical(&self) -> Vec<f64> {
        let mut c = self.coeffs.clone();
        self.grid.fft2(&mut c, true);
        let w = 1.0 / self.grid.area();
        c.iter().map(|z| z.re * w).collect()
    }

    pub fn grid(&self) -> &Arc<FourierGrid> {
        &self.grid
    }

    /// Multiply modewise by `m(ξ, η)`. Modes with zero coefficient are skipped,
    /// so a singular symbol only errors where it meets energy.
    pub fn apply_multiplier<F>(&self, m: F) -> Result<SpectralField>
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        let g = &self.grid;
        let mut out = vec![ZERO; g.len()];
        let bad = out
            .par_chunks_mut(g.nx)
            .enumerate()
            .map(|(l, row)| {
                let mut bad = None;
                for (k, o) in row.iter_mut().enumerate() {
                    let c = self.coeffs[l * g.nx + k];
                    if c == ZERO {
                        continue;
                    }
                    let v = m(g.xi[k], g.eta[l]);
                    if !(v.re.is_finite() && v.im.is_finite()) {
                        bad.get_or_insert((k, l));
                    }
                    *o = v * c;
                }
                bad
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .next();
        if let Some((k, l)) = bad {
            return Err(Error::NonFiniteMultiplier(k, l));
        }
        Ok(SpectralField::from_coeffs(g.clone(), out))
    }

    /// Real-symbol convenience wrapper around [`apply_multiplier`](Self::apply_multiplier).
    pub fn scaled_by<F>(&self, m: F) -> Result<SpectralField>
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        self.apply_multiplier(|a, b| Complex64::new(m(a, b), 0.0))
    }

    pub fn dx(&self) -> SpectralField {
        self.apply_multiplier(|xi, _| Complex64::new(0.0, xi))
            .expect("finite symbol")
    }

    pub fn dy(&self) -> SpectralField {
        self.apply_multiplier(|_, eta| Complex64::new(0.0, eta))
            .expect("finite symbol")
    }

    pub fn laplacian(&self) -> SpectralField {
        self.scaled_by(|xi, eta| -(xi * xi + eta * eta))
            .expect("finite symbol")
    }

    pub fn add(&self, o: &SpectralField) -> SpectralField {
        let c = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect();
        SpectralField::from_coeffs(self.grid.clone(), c)
    }

    pub fn sub(&self, o: &SpectralField) -> SpectralField {
        let c = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a - b).collect();
        SpectralField::from_coeffs(self.grid.clone(), c)
    }

    pub fn scale(&self, s: f64) -> SpectralField {
        let c = self.coeffs.iter().map(|a| a * s).collect();
        SpectralField::from_coeffs(self.grid.clone(), c)
    }

    /// Coefficient at `(k, l)`.
    pub fn at(&self, k: usize, l: usize) -> Complex64 {
        self.coeffs[self.grid.index(k, l)]
    }

    pub fn mean_mode(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// `max |c(−k) − conj c(k)| / max |c|`, zero for real fields.
    pub fn hermitian_defect(&self) -> f64 {
        let g = &self.grid;
        let scale = self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut d: f64 = 0.0;
        for l in 0..g.ny {
            for k in 0..g.nx {
                let (mk, ml) = g.mirror(k, l);
                d = d.max((self.at(mk, ml) - self.at(k, l).conj()).norm());
            }
        }
        d / scale
    }

    /// `(LxLy)⁻¹ Σ |c|²`, the squared L² norm by Parseval.
    pub fn l2_sq(&self) -> f64 {
        kahan_sum(self.coeffs.iter().map(|z| z.norm_sqr())) / self.grid.area()
    }
}

/// Forward then inverse transform.
pub fn transform_roundtrip(f: &SpectralField) -> SpectralField {
    SpectralField::from_physical(f.grid.clone(), &f.to_physical())
}

/// Perturbation unknowns `(n, u, v, ψ)` on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationState {
    pub n: SpectralField,
    pub u: SpectralField,
    pub v: SpectralField,
    pub psi: SpectralField,
}

impl PerturbationState {
    pub fn zeros(grid: Arc<FourierGrid>) -> Self {
        PerturbationState {
            n: SpectralField::zeros(grid.clone()),
            u: SpectralField::zeros(grid.clone()),
            v: SpectralField::zeros(grid.clone()),
            psi: SpectralField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Arc<FourierGrid> {
        self.n.grid()
    }

    pub fn fields(&self) -> [&SpectralField; 4] {
        [&self.n, &self.u, &self.v, &self.psi]
    }

    pub fn from_fields(f: [SpectralField; 4]) -> Self {
        let [n, u, v, psi] = f;
        assert!(u.grid == n.grid && v.grid == n.grid && psi.grid == n.grid);
        PerturbationState { n, u, v, psi }
    }

    pub fn map(&self, f: impl Fn(&SpectralField) -> SpectralField) -> Self {
        PerturbationState {
            n: f(&self.n),
            u: f(&self.u),
            v: f(&self.v),
            psi: f(&self.psi),
        }
    }

    /// Largest coefficient difference over all four fields.
    pub fn max_diff(&self, o: &PerturbationState) -> f64 {
        self.fields()
            .iter()
            .zip(o.fields())
            .flat_map(|(a, b)| a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }

    pub fn add(&self, o: &PerturbationState) -> PerturbationState {
        PerturbationState::from_fields([
            self.n.add(&o.n),
            self.u.add(&o.u),
            self.v.add(&o.v),
            self.psi.add(&o.psi),
        ])
    }

    pub fn sub(&self, o: &PerturbationState) -> PerturbationState {
        PerturbationState::from_fields([
            self.n.sub(&o.n),
            self.u.sub(&o.u),
            self.v.sub(&o.v),
            self.psi.sub(&o.psi),
        ])
    }

    pub fn max_abs(&self) -> f64 {
        self.fields()
            .iter()
            .flat_map(|a| a.coeffs.iter().map(|x| x.norm()))
            .fold(0.0, f64::max)
    }
}

/// `⟨∇⟩^s` or `|∇|^s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Weight {
    Inhomogeneous(f64),
    Homogeneous(f64),
}

impl Weight {
    pub fn symbol(self, a: f64) -> f64 {
        match self {
            Weight::Inhomogeneous(s) => (1.0 + a * a).powf(0.5 * s),
            Weight::Homogeneous(s) => {
                if s == 0.0 {
                    1.0
                } else if a == 0.0 {
                    if s > 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    a.powf(s)
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lp {
    L2,
    Inf,
}

fn weighted(f: &SpectralField, w: Weight) -> Result<SpectralField> {
    if let Weight::Homogeneous(s) = w {
        if s < 0.0 && f.mean_mode().norm() > 0.0 {
            return Err(Error::HomogeneousSingularity);
        }
    }
    f.scaled_by(|xi, eta| w.symbol(xi.hypot(eta)))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn sobolev_norm(f: &SpectralField, w: Weight, p: Lp) -> Result<f64> {
    let g = weighted(f, w)?;
    Ok(match p {
        Lp::L2 => g.l2_sq().sqrt(),
        Lp::Inf => max_abs(&g.to_physical()),
    })
}

/// L² norm of a vector of fields, each weighted by `w`.
pub fn vector_l2(fs: &[&SpectralField], w: Weight) -> Result<f64> {
    let mut k = Kahan::new();
    for f in fs {
        k.add(weighted(f, w)?.l2_sq());
    }
    Ok(k.value().sqrt())
}

/// Sup over the grid of the pointwise Euclidean length of a weighted vector field.
pub fn vector_linf(fs: &[&SpectralField], w: Weight) -> Result<f64> {
    let phys: Vec<Vec<f64>> = fs
        .iter()
        .map(|f| weighted(f, w).map(|g| g.to_physical()))
        .collect::<Result<_>>()?;
    let n = phys.first().map_or(0, |p| p.len());
    Ok((0..n)
        .map(|i| phys.iter().map(|p| p[i] * p[i]).sum::<f64>().sqrt())
        .fold(0.0, f64::max))
}

/// `‖f‖_{L²ₓL^∞_y}`: sup over each x-column, then L² in x.
pub fn mixed_norm_l2x_linfy(f: &SpectralField) -> f64 {
    let g = f.grid();
    let p = f.to_physical();
    let cols = (0..g.nx).map(|j| {
        let s = (0..g.ny).fold(0.0f64, |m, l| m.max(p[l * g.nx + j].abs()));
        s * s * g.dx()
    });
    kahan_sum(cols).sqrt()
}

fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / s).exp();
        let b = (-1.0 / (1.0 - s)).exp();
        a / (a + b)
    }
}

/// Width of the transition of the Littlewood–Paley bump.
pub const BUMP_WIDTH: f64 = 1e-4;

/// `χ(r)`: 1 on `|r| ≤ 1`, 0 on `|r| ≥ 1 + 10⁻⁴`, C^∞ in between.
pub fn bump(r: f64) -> f64 {
    smooth_step((1.0 + BUMP_WIDTH - r.abs()) / BUMP_WIDTH)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Projection {
    /// `P_{≤N}`
    Low,
    /// `P_N`
    Band,
    /// `P_{>N}`
    High,
}

pub fn lp_symbol(a: f64, n: f64, kind: Projection) -> f64 {
    match kind {
        Projection::Low => bump(a / n),
        Projection::Band => bump(a / n) - bump(2.0 * a / n),
        Projection::High => 1.0 - bump(a / n),
    }
}

pub fn lp_project(f: &SpectralField, n: f64, kind: Projection) -> SpectralField {
    f.scaled_by(|xi, eta| lp_symbol(xi.hypot(eta), n, kind))
        .expect("bounded symbol")
}

/// Parameters of the working-space norms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XParams {
    pub m: f64,
    pub eps: f64,
    pub gamma: f64,
    pub gamma_bar: f64,
}

impl Default for XParams {
    fn default() -> Self {
        XParams {
            m: 8.0,
            eps: 0.01,
            gamma: 0.75,
            gamma_bar: 1.0,
        }
    }
}

impl XParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gamma > 0.5
            && self.gamma <= 1.0
            && self.gamma_bar > 0.5 * self.gamma
            && self.gamma_bar < 1.0 + 0.5 * self.gamma
            && self.m >= 8.0
            && self.eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("X-norm parameters out of range: {self:?}")))
        }
    }
}

/// Every summand of the three working-space norms at one time, unweighted,
/// with the time weight of each summand alongside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XNormBreakdown {
    pub t: f64,
    pub params: XParams,
    pub entries: BTreeMap<String, f64>,
    /// Exponent `e` of the weight `⟨t⟩^e` attached to each entry.
    pub weight_exponents: BTreeMap<String, f64>,
}

impl XNormBreakdown {
    pub fn weight(&self, key: &str) -> f64 {
        let tb = (1.0 + self.t * self.t).sqrt();
        tb.powf(self.weight_exponents[key])
    }

    /// `Σ ⟨t⟩^e · entry`, the instantaneous value inside the sup defining `‖U‖_X`.
    pub fn weighted_total(&self) -> f64 {
        self.entries.iter().map(|(k, v)| self.weight(k) * v).sum()
    }
}

/// Names of the summands in a fixed order.
pub const X_KEYS: [&str; 16] = [
    "n_HM",
    "n_H3",
    "n_Linf_H3/2",
    "n_dx_H1",
    "u_HM",
    "u_L2",
    "u_Linf_H1",
    "v_L2x_Linfy",
    "u_Hdot_gamma",
    "u_dx_H1",
    "v_grad_H1",
    "psi_grad_HM",
    "psi_H4_Hdot_gamma",
    "psi_dx_L2",
    "psi_dx_grad_L2",
    "psi_Linf_Hdot_gbar_H1",
];

pub fn x_norm_snapshot(state: &PerturbationState, t: f64, p: XParams) -> Result<XNormBreakdown> {
    p.validate()?;
    use Weight::{Homogeneous as H, Inhomogeneous as In};
    let (n, u, v, psi) = (&state.n, &state.u, &state.v, &state.psi);
    let (psx, psy) = (psi.dx(), psi.dy());
    let un = n.dx();
    let ux = u.dx();
    let (vx, vy) = (v.dx(), v.dy());
    let mut e = BTreeMap::new();
    let mut w = BTreeMap::new();
    let mut put = |k: &str, val: f64, wt: f64| {
        e.insert(k.to_string(), val);
        w.insert(k.to_string(), wt);
    };
    put("n_HM", sobolev_norm(n, In(p.m), Lp::L2)?, -p.eps);
    put("n_H3", sobolev_norm(n, In(3.0), Lp::L2)?, 0.25);
    put("n_Linf_H3/2", sobolev_norm(n, In(1.5), Lp::Inf)?, 0.5);
    put("n_dx_H1", sobolev_norm(&un, In(1.0), Lp::L2)?, 0.75);
    put("u_HM", vector_l2(&[u, v], In(p.m))?, -p.eps);
    put("u_L2", vector_l2(&[u, v], In(0.0))?, 0.5);
    put("u_Linf_H1", vector_linf(&[u, v], In(1.0))?, 1.0);
    put("v_L2x_Linfy", mixed_norm_l2x_linfy(v), 0.75);
    put("u_Hdot_gamma", vector_l2(&[u, v], H(p.gamma))?, 0.75);
    put("u_dx_H1", sobolev_norm(&ux, In(1.0), Lp::L2)?, 1.0);
    put("v_grad_H1", vector_l2(&[&vx, &vy], In(1.0))?, 1.0);
    put("psi_grad_HM", vector_l2(&[&psx, &psy], In(p.m))?, -p.eps);
    let g4 = psi.scaled_by(|a, b| {
        let r = a.hypot(b);
        In(4.0).symbol(r) * H(p.gamma).symbol(r)
    })?;
    put("psi_H4_Hdot_gamma", g4.l2_sq().sqrt(), 0.25);
    put("psi_dx_L2", psx.l2_sq().sqrt(), 0.5);
    put("psi_dx_grad_L2", vector_l2(&[&psx.dx(), &psx.dy()], In(0.0))?, 0.75);
    let gb = psi.scaled_by(|a, b| {
        let r = a.hypot(b);
        In(1.0).symbol(r) * H(p.gamma_bar).symbol(r)
    })?;
    put("psi_Linf_Hdot_gbar_H1", max_abs(&gb.to_physical()), 0.5);
    Ok(XNormBreakdown {
        t,
        params: p,
        entries: e,
        weight_exponents: w,
    })
}

/// Discrete surrogate of the initial-data norm
/// `‖⟨∇⟩^M(n, u, ∇ψ)‖₂ + ‖⟨∇⟩⁵(n, u, ∇ψ)‖_{L¹}`.
pub fn x0_norm(state: &PerturbationState, m: f64) -> Result<f64> {
    let (psx, psy) = (state.psi.dx(), state.psi.dy());
    let fs = [&state.n, &state.u, &state.v, &psx, &psy];
    let l2 = vector_l2(&fs, Weight::Inhomogeneous(m))?;
    let phys: Vec<Vec<f64>> = fs
        .iter()
        .map(|f| weighted(f, Weight::Inhomogeneous(5.0)).map(|g| g.to_physical()))
        .collect::<Result<_>>()?;
    let g = state.grid();
    let l1 = kahan_sum((0..g.len()).map(|i| phys.iter().map(|p| p[i] * p[i]).sum::<f64>().sqrt()))
        * g.dx()
        * g.dy();
    Ok(l2 + l1)
}

/// `‖⟨∇⟩^M(n, u, ∇ψ)‖₂`.
pub fn energy(state: &PerturbationState, m: f64) -> Result<f64> {
    let (psx, psy) = (state.psi.dx(), state.psi.dy());
    vector_l2(&[&state.n, &state.u, &state.v, &psx, &psy], Weight::Inhomogeneous(m))
}
