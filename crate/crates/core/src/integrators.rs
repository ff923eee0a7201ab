//! Split-step and pseudo-spectral RK4 time steppers, seeding, and the run driver.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{Band, BandSpec, BandTrack};
use crate::mat2::Mat2;
use crate::models::{psi_to_uv, uv_to_psi, GnSoliton, Model, ThirringSoliton};
use crate::spectral::{gn_propagator, thirring_propagator, Grid, SpectrumField, SpinorField, Transform};
use crate::{Error, Result};

/// Amplitude at which a run is declared blown up.
pub const BLOW_UP: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// First-order (Lie) split step.
    Ssm1,
    /// Symmetric (Strang) split step.
    Ssm2,
    /// Classical RK4 in time with spectral derivatives.
    Rk4ps,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Ssm1 => "ssm1",
            Scheme::Ssm2 => "ssm2",
            Scheme::Rk4ps => "rk4ps",
        }
    }
}

fn nonlinear_gn(x1: &mut [C64], x2: &mut [C64], dt: f64) -> f64 {
    let mut peak = 0.0f64;
    for (a, b) in x1.iter_mut().zip(x2.iter_mut()) {
        let (na, nb) = (a.norm_sqr(), b.norm_sqr());
        peak = peak.max(na).max(nb);
        let th = na - nb - 1.0;
        let r = C64::from_polar(1.0, dt * th);
        *a *= r;
        *b *= r.conj();
    }
    peak
}

fn nonlinear_thirring(u: &mut [C64], v: &mut [C64], dt: f64) -> f64 {
    let mut peak = 0.0f64;
    for (a, b) in u.iter_mut().zip(v.iter_mut()) {
        let (na, nb) = (a.norm_sqr(), b.norm_sqr());
        peak = peak.max(na).max(nb);
        *a *= C64::from_polar(1.0, nb * dt);
        *b *= C64::from_polar(1.0, na * dt);
    }
    peak
}

fn apply_table(table: &[Mat2], g1: &mut [C64], g2: &mut [C64]) {
    for ((m, a), b) in table.iter().zip(g1.iter_mut()).zip(g2.iter_mut()) {
        let [x, y] = m.apply([*a, *b]);
        *a = x;
        *b = y;
    }
}

/// Split-step stepper holding its state in Fourier space.
///
/// The loop is always `g ← L(dt)·F[N(dt)·F⁻¹ g]`; the schemes differ only in how
/// the stored `g` relates to the field: `ψ = out·g`.
pub struct SplitStep {
    model: Model,
    grid: Grid,
    dt: f64,
    tr: Transform,
    full: Vec<Mat2>,
    out: Option<Vec<Mat2>>,
    out_inv: Option<Vec<Mat2>>,
    g1: Vec<C64>,
    g2: Vec<C64>,
    x1: Vec<C64>,
    x2: Vec<C64>,
    kill: Vec<usize>,
    peak: f64,
}

impl SplitStep {
    /// `order` is `Ssm1` (Lie) or `Ssm2` (Strang). For GN the Lie step is
    /// `D·N` (nonlinear first); for Thirring it is `N·L` (linear first).
    pub fn new(model: Model, scheme: Scheme, field: &SpinorField, dt: f64) -> Result<SplitStep> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::param("dt", format!("must be finite and nonzero, got {dt}")));
        }
        let grid = field.grid;
        let n = grid.len();
        let prop = |k: f64, h: f64| match model {
            Model::Gn => gn_propagator(k, h),
            Model::Thirring => thirring_propagator(k, h),
        };
        let table = |h: f64| (0..n).map(|p| prop(grid.k_natural(p), h)).collect::<Vec<_>>();
        let (out, out_inv) = match (scheme, model) {
            (Scheme::Ssm2, _) => (Some(table(-dt / 2.0)), Some(table(dt / 2.0))),
            (Scheme::Ssm1, Model::Gn) => (None, None),
            (Scheme::Ssm1, Model::Thirring) => (Some(table(-dt)), Some(table(dt))),
            (Scheme::Rk4ps, _) => {
                return Err(Error::param("scheme", "rk4ps is not a split-step scheme"));
            }
        };
        let mut s = SplitStep {
            model,
            grid,
            dt,
            tr: Transform::new(n),
            full: table(dt),
            out,
            out_inv,
            g1: field.c1.clone(),
            g2: field.c2.clone(),
            x1: vec![C64::new(0.0, 0.0); n],
            x2: vec![C64::new(0.0, 0.0); n],
            kill: Vec::new(),
            peak: field.max_abs(),
        };
        s.tr.fft_raw(&mut s.g1);
        s.tr.fft_raw(&mut s.g2);
        if let Some(t) = &s.out_inv {
            apply_table(t, &mut s.g1, &mut s.g2);
        }
        Ok(s)
    }

    /// Zero harmonics with `k_lo ≤ |k| ≤ k_hi` after every step.
    pub fn set_filter(&mut self, k_lo: f64, k_hi: f64) {
        self.kill = (0..self.grid.len())
            .filter(|&p| {
                let k = self.grid.k_natural(p).abs();
                k >= k_lo && k <= k_hi
            })
            .collect();
        self.apply_filter();
    }

    fn apply_filter(&mut self) {
        for &p in &self.kill {
            self.g1[p] = C64::new(0.0, 0.0);
            self.g2[p] = C64::new(0.0, 0.0);
        }
    }

    pub fn step(&mut self) {
        self.x1.copy_from_slice(&self.g1);
        self.x2.copy_from_slice(&self.g2);
        self.tr.ifft_raw(&mut self.x1);
        self.tr.ifft_raw(&mut self.x2);
        let peak2 = match self.model {
            Model::Gn => nonlinear_gn(&mut self.x1, &mut self.x2, self.dt),
            Model::Thirring => nonlinear_thirring(&mut self.x1, &mut self.x2, self.dt),
        };
        self.peak = peak2.sqrt();
        std::mem::swap(&mut self.x1, &mut self.g1);
        std::mem::swap(&mut self.x2, &mut self.g2);
        self.tr.fft_raw(&mut self.g1);
        self.tr.fft_raw(&mut self.g2);
        apply_table(&self.full, &mut self.g1, &mut self.g2);
        if !self.kill.is_empty() {
            self.apply_filter();
        }
    }

    /// Largest |component| seen in x-space during the last step.
    pub fn peak(&self) -> f64 {
        self.peak
    }

    /// Field spectrum in natural FFT order (of centered samples).
    fn natural_spectrum(&self) -> (Vec<C64>, Vec<C64>) {
        let (mut a, mut b) = (self.g1.clone(), self.g2.clone());
        if let Some(t) = &self.out {
            apply_table(t, &mut a, &mut b);
        }
        (a, b)
    }

    pub fn spectrum(&self) -> SpectrumField {
        let (a, b) = self.natural_spectrum();
        let n = self.grid.len();
        let mut s1 = vec![C64::new(0.0, 0.0); n];
        let mut s2 = vec![C64::new(0.0, 0.0); n];
        self.tr.natural_to_centered(&a, &mut s1);
        self.tr.natural_to_centered(&b, &mut s2);
        SpectrumField { grid: self.grid, s1, s2 }
    }

    pub fn field(&self) -> SpinorField {
        let (mut a, mut b) = self.natural_spectrum();
        self.tr.ifft_raw(&mut a);
        self.tr.ifft_raw(&mut b);
        SpinorField { grid: self.grid, c1: a, c2: b }
    }

    /// Charge by Parseval; the output map is unitary.
    pub fn charge(&self) -> f64 {
        let s: f64 = self.g1.iter().chain(&self.g2).map(|z| z.norm_sqr()).sum();
        s / self.grid.len() as f64 * self.grid.dx()
    }
}

/// Classical RK4 on the GN equations in u, v variables with spectral derivatives.
pub struct Rk4Ps {
    grid: Grid,
    dt: f64,
    tr: Transform,
    u: Vec<C64>,
    v: Vec<C64>,
    /// Drop every non-derivative term (mass and interaction).
    linear_only: bool,
    kill: Vec<usize>,
    scratch: [Vec<C64>; 10],
}

impl Rk4Ps {
    /// `field` is given in u, v variables.
    pub fn new(field: &SpinorField, dt: f64, linear_only: bool) -> Result<Rk4Ps> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::param("dt", format!("must be finite and nonzero, got {dt}")));
        }
        let n = field.grid.len();
        Ok(Rk4Ps {
            grid: field.grid,
            dt,
            tr: Transform::new(n),
            u: field.c1.clone(),
            v: field.c2.clone(),
            linear_only,
            kill: Vec::new(),
            scratch: std::array::from_fn(|_| vec![C64::new(0.0, 0.0); n]),
        })
    }

    pub fn set_filter(&mut self, k_lo: f64, k_hi: f64) {
        self.kill = (0..self.grid.len())
            .filter(|&p| {
                let k = self.grid.k_natural(p).abs();
                k >= k_lo && k <= k_hi
            })
            .collect();
        self.apply_filter();
    }

    fn apply_filter(&mut self) {
        if self.kill.is_empty() {
            return;
        }
        for buf in [&mut self.u, &mut self.v] {
            self.tr.fft_raw(buf);
            for &p in &self.kill {
                buf[p] = C64::new(0.0, 0.0);
            }
            self.tr.ifft_raw(buf);
        }
    }

    /// r.h.s.: `u_t = −u_x + i(u|v|² + u*v² − v)`, `v_t = v_x + i(v|u|² + v*u² − u)`.
    fn rhs(&self, u: &[C64], v: &[C64], du: &mut [C64], dv: &mut [C64]) {
        du.copy_from_slice(u);
        dv.copy_from_slice(v);
        self.tr.derivative(&self.grid, du);
        self.tr.derivative(&self.grid, dv);
        let i = C64::new(0.0, 1.0);
        for j in 0..u.len() {
            let (a, b) = (u[j], v[j]);
            let mut fu = -du[j];
            let mut fv = dv[j];
            if !self.linear_only {
                fu += i * (a * b.norm_sqr() + a.conj() * b * b - b);
                fv += i * (b * a.norm_sqr() + b.conj() * a * a - a);
            }
            du[j] = fu;
            dv[j] = fv;
        }
    }

    pub fn step(&mut self) {
        let h = self.dt;
        let n = self.u.len();
        let [mut k1u, mut k1v, mut k2u, mut k2v, mut k3u, mut k3v, mut k4u, mut k4v, mut tu, mut tv] =
            std::mem::take(&mut self.scratch);
        self.rhs(&self.u, &self.v, &mut k1u, &mut k1v);
        for j in 0..n {
            tu[j] = self.u[j] + k1u[j] * (h / 2.0);
            tv[j] = self.v[j] + k1v[j] * (h / 2.0);
        }
        self.rhs(&tu, &tv, &mut k2u, &mut k2v);
        for j in 0..n {
            tu[j] = self.u[j] + k2u[j] * (h / 2.0);
            tv[j] = self.v[j] + k2v[j] * (h / 2.0);
        }
        self.rhs(&tu, &tv, &mut k3u, &mut k3v);
        for j in 0..n {
            tu[j] = self.u[j] + k3u[j] * h;
            tv[j] = self.v[j] + k3v[j] * h;
        }
        self.rhs(&tu, &tv, &mut k4u, &mut k4v);
        for j in 0..n {
            self.u[j] += (k1u[j] + (k2u[j] + k3u[j]) * 2.0 + k4u[j]) * (h / 6.0);
            self.v[j] += (k1v[j] + (k2v[j] + k3v[j]) * 2.0 + k4v[j]) * (h / 6.0);
        }
        self.scratch = [k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v, tu, tv];
        self.apply_filter();
    }

    /// Current state in u, v variables.
    pub fn state(&self) -> SpinorField {
        SpinorField { grid: self.grid, c1: self.u.clone(), c2: self.v.clone() }
    }

    pub fn peak(&self) -> f64 {
        self.u.iter().chain(&self.v).fold(0.0f64, |m, z| m.max(z.norm()))
    }
}

/// One Strang step `D(dt/2)·N(dt)·D(dt/2)` of the GN equations.
pub fn ssm2_step_gn(f: &SpinorField, dt: f64) -> Result<SpinorField> {
    let mut s = SplitStep::new(Model::Gn, Scheme::Ssm2, f, dt)?;
    s.step();
    Ok(s.field())
}

/// One Lie step `D(dt)·N(dt)` of the GN equations.
pub fn ssm1_step_gn(f: &SpinorField, dt: f64) -> Result<SpinorField> {
    let mut s = SplitStep::new(Model::Gn, Scheme::Ssm1, f, dt)?;
    s.step();
    Ok(s.field())
}

/// One Thirring step: linear flow, then the phase rotations. Field in u, v.
pub fn ssm_step_thirring(f: &SpinorField, dt: f64) -> Result<SpinorField> {
    let mut s = SplitStep::new(Model::Thirring, Scheme::Ssm1, f, dt)?;
    s.step();
    Ok(s.field())
}

/// One RK4 step of the GN equations written in u, v variables.
pub fn rk4ps_step_gn(f: &SpinorField, dt: f64) -> Result<SpinorField> {
    let mut s = Rk4Ps::new(f, dt, false)?;
    s.step();
    Ok(s.state())
}

/// Adds independent uniform noise in `[−a, a]` to the real and imaginary part of
/// every sample of both components.
pub fn seed_noise(f: &SpinorField, amplitude: f64, seed: u64) -> SpinorField {
    let mut out = f.clone();
    if amplitude == 0.0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for z in out.c1.iter_mut().chain(out.c2.iter_mut()) {
        let re = rng.gen_range(-amplitude..=amplitude);
        let im = rng.gen_range(-amplitude..=amplitude);
        *z += C64::new(re, im);
    }
    out
}

/// Adds `amplitude` to every Fourier coefficient of both components, or only to
/// those with `|k|` inside `band` when given.
pub fn seed_flat_spectrum(f: &SpinorField, amplitude: f64, band: Option<(f64, f64)>) -> SpinorField {
    if amplitude == 0.0 {
        return f.clone();
    }
    let tr = Transform::new(f.grid.len());
    let mut s = tr.dft(f);
    for i in 0..f.grid.len() {
        let k = f.grid.k(i).abs();
        if band.is_none_or(|(lo, hi)| k >= lo && k <= hi) {
            s.s1[i] += amplitude;
            s.s2[i] += amplitude;
        }
    }
    tr.idft(&s)
}

fn default_noise() -> f64 {
    1e-12
}

fn default_scale() -> [f64; 2] {
    [1.0, 1.0]
}

fn default_true() -> bool {
    true
}

/// Grid size given either directly or in multiples of π.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_pi: Option<f64>,
    /// Added to the length after conversion (e.g. `40π + 4.2`).
    #[serde(default, skip_serializing_if = "is_zero")]
    pub length_offset: f64,
    pub points: usize,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl GridSpec {
    pub fn pi(multiple: f64, points: usize) -> GridSpec {
        GridSpec { length: None, length_pi: Some(multiple), length_offset: 0.0, points }
    }

    pub fn resolve(&self) -> Result<Grid> {
        let base = match (self.length, self.length_pi) {
            (Some(l), None) => l,
            (None, Some(m)) => m * PI,
            (None, None) => return Err(Error::param("grid.length", "missing (give length or length_pi)")),
            (Some(_), Some(_)) => {
                return Err(Error::param("grid.length", "give only one of length, length_pi"));
            }
        };
        Grid::new(base + self.length_offset, self.points)
    }
}

/// Constant added to every Fourier mode at t = 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatSpectrum {
    pub amplitude: f64,
    /// Only modes with `band[0] ≤ |k| ≤ band[1]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<[f64; 2]>,
}

/// Initial soliton(s) plus deterministic perturbations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    /// GN solitons, summed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub solitons: Vec<GnSoliton>,
    /// Thirring soliton parameter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thirring_q: Option<f64>,
    /// Per-component factors applied to the soliton field.
    #[serde(default = "default_scale")]
    pub scale: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flat_spectrum: Option<FlatSpectrum>,
}

impl InitialCondition {
    pub fn gn(solitons: Vec<GnSoliton>) -> InitialCondition {
        InitialCondition { solitons, thirring_q: None, scale: [1.0, 1.0], flat_spectrum: None }
    }

    pub fn thirring(q: f64) -> InitialCondition {
        InitialCondition { solitons: Vec::new(), thirring_q: Some(q), scale: [1.0, 1.0], flat_spectrum: None }
    }
}

/// Harmonics removed after every step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandFilter {
    pub k_lo: f64,
    pub k_hi: f64,
}

/// Everything needed to reproduce one simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: Model,
    pub scheme: Scheme,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Time step as a multiple of `dx`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_over_dx: Option<f64>,
    pub t_max: f64,
    /// Steps between snapshots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cadence: Option<usize>,
    /// Time between snapshots; converted to a step count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_interval: Option<f64>,
    #[serde(default = "default_noise")]
    pub noise_amplitude: f64,
    #[serde(default)]
    pub seed: u64,
    pub initial: InitialCondition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<BandFilter>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bands: Vec<BandSpec>,
    /// Keep full spectra in the snapshots (scalars are always kept).
    #[serde(default = "default_true")]
    pub store_spectra: bool,
    /// RK4 only: drop mass and interaction terms.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub linear_only: bool,
}

/// Validated, fully resolved numbers of a [`RunConfig`].
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub grid: Grid,
    pub dt: f64,
    pub steps: usize,
    pub cadence: usize,
    pub bands: Vec<Band>,
}

impl RunConfig {
    pub fn resolve(&self) -> Result<Resolved> {
        let grid = self.grid.resolve()?;
        let dt = match (self.dt, self.dt_over_dx) {
            (Some(dt), None) => dt,
            (None, Some(r)) => r * grid.dx(),
            (None, None) => return Err(Error::param("dt", "missing (give dt or dt_over_dx)")),
            (Some(_), Some(_)) => return Err(Error::param("dt", "give only one of dt, dt_over_dx")),
        };
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        if !(self.t_max.is_finite() && self.t_max >= dt) {
            return Err(Error::param("t_max", format!("must be at least dt = {dt}, got {}", self.t_max)));
        }
        let cadence = match (self.cadence, self.record_interval) {
            (Some(c), None) => c,
            (None, Some(t)) => (t / dt).round() as usize,
            (None, None) => 1,
            (Some(_), Some(_)) => {
                return Err(Error::param("cadence", "give only one of cadence, record_interval"));
            }
        };
        if cadence < 1 {
            return Err(Error::param("cadence", "must be at least one step"));
        }
        if !(self.noise_amplitude >= 0.0) {
            return Err(Error::param("noise_amplitude", "must be non-negative"));
        }
        match self.model {
            Model::Gn => {
                if self.initial.solitons.is_empty() && self.initial.thirring_q.is_some() {
                    return Err(Error::param("initial.thirring_q", "not valid for the gn model"));
                }
                for s in &self.initial.solitons {
                    s.validate()?;
                }
            }
            Model::Thirring => {
                if !self.initial.solitons.is_empty() {
                    return Err(Error::param("initial.solitons", "not valid for the thirring model"));
                }
                if self.scheme == Scheme::Rk4ps {
                    return Err(Error::param("scheme", "rk4ps is implemented for the gn model only"));
                }
                if let Some(q) = self.initial.thirring_q {
                    ThirringSoliton::new(q)?;
                }
            }
        }
        if let Some(f) = &self.filter {
            if !(f.k_lo <= f.k_hi) {
                return Err(Error::param("filter", "k_lo must not exceed k_hi"));
            }
        }
        let bands = self.bands.iter().map(|b| b.resolve(&grid, dt)).collect::<Result<Vec<_>>>()?;
        let steps = (self.t_max / dt).round() as usize;
        Ok(Resolved { grid, dt, steps, cadence, bands })
    }

    /// Soliton field plus seeding, in the variables the scheme evolves
    /// (ψ for GN, u, v for Thirring).
    pub fn initial_field(&self, grid: Grid) -> Result<SpinorField> {
        let mut f = SpinorField::zeros(grid);
        match self.model {
            Model::Gn => {
                for s in &self.initial.solitons {
                    let g = s.field(grid, 0.0);
                    for j in 0..grid.len() {
                        f.c1[j] += g.c1[j];
                        f.c2[j] += g.c2[j];
                    }
                }
            }
            Model::Thirring => {
                if let Some(q) = self.initial.thirring_q {
                    f = ThirringSoliton::new(q)?.field(grid, 0.0);
                }
            }
        }
        let [s1, s2] = self.initial.scale;
        f.c1.iter_mut().for_each(|z| *z *= s1);
        f.c2.iter_mut().for_each(|z| *z *= s2);
        if let Some(flat) = &self.initial.flat_spectrum {
            f = seed_flat_spectrum(&f, flat.amplitude, flat.band.map(|[a, b]| (a, b)));
        }
        Ok(seed_noise(&f, self.noise_amplitude, self.seed))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    BlowUp { t: f64, amplitude: f64 },
}

/// Scalars kept at every snapshot, and optionally the spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub charge: f64,
    /// One amplitude per declared band, in declaration order.
    pub band_amplitudes: Vec<f64>,
    pub spectrum: Option<SpectrumField>,
}

/// Output of [`run_simulation`].
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub config: RunConfig,
    pub grid: Grid,
    pub dt: f64,
    pub bands: Vec<Band>,
    pub snapshots: Vec<Snapshot>,
    /// Field at the last step, in ψ variables for GN and u, v for Thirring.
    pub final_field: SpinorField,
    pub termination: Termination,
    pub steps_taken: usize,
}

impl Trajectory {
    pub fn track(&self, label: &str) -> Option<BandTrack> {
        let i = self.bands.iter().position(|b| b.label == label)?;
        let b = &self.bands[i];
        Some(BandTrack {
            label: b.label.clone(),
            k_center: b.k_center,
            k_halfwidth: b.k_halfwidth,
            times: self.snapshots.iter().map(|s| s.t).collect(),
            amplitudes: self.snapshots.iter().map(|s| s.band_amplitudes[i]).collect(),
        })
    }

    pub fn tracks(&self) -> Vec<BandTrack> {
        self.bands.iter().filter_map(|b| self.track(&b.label)).collect()
    }

    /// Snapshot whose time is closest to `t` among those carrying a spectrum.
    pub fn spectrum_near(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots
            .iter()
            .filter(|s| s.spectrum.is_some())
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }

    pub fn charge_drift(&self) -> f64 {
        let q0 = self.snapshots.first().map_or(0.0, |s| s.charge);
        self.snapshots
            .iter()
            .map(|s| ((s.charge - q0) / q0).abs())
            .fold(0.0, f64::max)
    }

    /// Little-endian f64 stream: N, snapshot count, then for each snapshot
    /// `t` followed by interleaved re/im of `s1` and then of `s2`, centered order.
    /// Snapshots without a spectrum are skipped.
    pub fn write_spectra(&self, mut w: impl Write) -> Result<()> {
        let with: Vec<&Snapshot> = self.snapshots.iter().filter(|s| s.spectrum.is_some()).collect();
        let mut put = |v: f64| w.write_all(&v.to_le_bytes());
        put(self.grid.len() as f64)?;
        put(with.len() as f64)?;
        for s in with {
            put(s.t)?;
            let sp = s.spectrum.as_ref().expect("filtered above");
            for z in sp.s1.iter().chain(&sp.s2) {
                put(z.re)?;
                put(z.im)?;
            }
        }
        Ok(())
    }

    pub fn save_spectra(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_spectra(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

/// Reads the stream written by [`Trajectory::write_spectra`] back into
/// `(t, spectrum)` pairs on a grid of the given length.
pub fn read_spectra(mut r: impl Read, length: f64) -> Result<Vec<(f64, SpectrumField)>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let vals: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let bad = || Error::Config("truncated spectra file".into());
    let n = *vals.first().ok_or_else(bad)? as usize;
    let count = *vals.get(1).ok_or_else(bad)? as usize;
    let grid = Grid::new(length, n)?;
    let per = 1 + 4 * n;
    if vals.len() != 2 + count * per {
        return Err(bad());
    }
    let mut out = Vec::with_capacity(count);
    for c in 0..count {
        let base = 2 + c * per;
        let t = vals[base];
        let read = |off: usize| -> Vec<C64> {
            (0..n).map(|i| C64::new(vals[off + 2 * i], vals[off + 2 * i + 1])).collect()
        };
        let s1 = read(base + 1);
        let s2 = read(base + 1 + 2 * n);
        out.push((t, SpectrumField { grid, s1, s2 }));
    }
    Ok(out)
}

enum Engine {
    Split(SplitStep),
    Rk4(Rk4Ps),
}

impl Engine {
    fn step(&mut self) {
        match self {
            Engine::Split(s) => s.step(),
            Engine::Rk4(s) => s.step(),
        }
    }

    fn peak(&self) -> f64 {
        match self {
            Engine::Split(s) => s.peak(),
            Engine::Rk4(s) => s.peak(),
        }
    }

    /// Field in the reporting variables.
    fn field(&self) -> SpinorField {
        match self {
            Engine::Split(s) => s.field(),
            Engine::Rk4(s) => uv_to_psi(&s.state()),
        }
    }

    fn spectrum_and_charge(&self) -> (SpectrumField, f64) {
        match self {
            Engine::Split(s) => (s.spectrum(), s.charge()),
            Engine::Rk4(s) => {
                let f = uv_to_psi(&s.state());
                let q = f.charge();
                (s.tr.dft(&f), q)
            }
        }
    }
}

/// Runs one simulation to `t_max` or until the field exceeds [`BLOW_UP`].
pub fn run_simulation(config: &RunConfig) -> Result<Trajectory> {
    let r = config.resolve()?;
    let start = config.initial_field(r.grid)?;
    let mut engine = match config.scheme {
        Scheme::Rk4ps => {
            let mut e = Rk4Ps::new(&psi_to_uv(&start), r.dt, config.linear_only)?;
            if let Some(f) = config.filter {
                e.set_filter(f.k_lo, f.k_hi);
            }
            Engine::Rk4(e)
        }
        scheme => {
            let mut e = SplitStep::new(config.model, scheme, &start, r.dt)?;
            if let Some(f) = config.filter {
                e.set_filter(f.k_lo, f.k_hi);
            }
            Engine::Split(e)
        }
    };
    let snapshot = |engine: &Engine, step: usize| {
        let (spec, charge) = engine.spectrum_and_charge();
        Snapshot {
            step,
            t: step as f64 * r.dt,
            charge,
            band_amplitudes: r.bands.iter().map(|b| b.amplitude(&spec)).collect(),
            spectrum: config.store_spectra.then_some(spec),
        }
    };
    let mut snapshots = vec![snapshot(&engine, 0)];
    let mut termination = Termination::Completed;
    let mut taken = 0;
    for step in 1..=r.steps {
        engine.step();
        taken = step;
        let peak = engine.peak();
        if !(peak <= BLOW_UP) {
            termination = Termination::BlowUp { t: step as f64 * r.dt, amplitude: peak };
            break;
        }
        if step % r.cadence == 0 || step == r.steps {
            snapshots.push(snapshot(&engine, step));
        }
    }
    if matches!(termination, Termination::BlowUp { .. })
        && snapshots.last().map(|s| s.step) != Some(taken)
    {
        snapshots.push(snapshot(&engine, taken));
    }
    Ok(Trajectory {
        config: config.clone(),
        grid: r.grid,
        dt: r.dt,
        bands: r.bands,
        snapshots,
        final_field: engine.field(),
        termination,
        steps_taken: taken,
    })
}

/// Runs several configurations, in parallel when enabled; order is preserved.
pub fn run_batch(configs: &[RunConfig], exec: crate::par::Execution) -> Vec<Result<Trajectory>> {
    crate::par::map(exec, configs, run_simulation)
}

/// Convenience for tests and scenarios: standing GN soliton run description.
pub fn gn_run(omega: f64, grid: GridSpec, dt: f64, t_max: f64) -> RunConfig {
    RunConfig {
        model: Model::Gn,
        scheme: Scheme::Ssm2,
        grid,
        dt: Some(dt),
        dt_over_dx: None,
        t_max,
        cadence: None,
        record_interval: None,
        noise_amplitude: default_noise(),
        seed: 1,
        initial: InitialCondition::gn(vec![GnSoliton { omega, velocity: 0.0, x0: 0.0 }]),
        filter: None,
        bands: Vec::new(),
        store_spectra: false,
        linear_only: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn soliton(omega: f64, n: usize) -> SpinorField {
        let g = Grid::new(40.0 * PI, n).unwrap();
        GnSoliton::standing(omega).unwrap().envelope(g)
    }

    #[test]
    fn zero_field_stays_zero() {
        let z = SpinorField::zeros(Grid::new(10.0, 64).unwrap());
        for f in [
            ssm2_step_gn(&z, 0.1).unwrap(),
            ssm1_step_gn(&z, 0.1).unwrap(),
            ssm_step_thirring(&z, 0.1).unwrap(),
            rk4ps_step_gn(&z, 0.1).unwrap(),
        ] {
            assert_eq!(f.max_abs(), 0.0);
        }
    }

    #[test]
    fn single_steps_conserve_charge() {
        let f = seed_noise(&soliton(0.6, 1024), 1e-3, 4);
        let q = f.charge();
        for g in [ssm2_step_gn(&f, 0.05).unwrap(), ssm1_step_gn(&f, 0.05).unwrap()] {
            assert!(((g.charge() - q) / q).abs() < 1e-13);
        }
        let t = ThirringSoliton::new(0.3 * PI).unwrap().envelope(f.grid);
        let q = t.charge();
        let g = ssm_step_thirring(&t, 0.05).unwrap();
        assert!(((g.charge() - q) / q).abs() < 1e-13);
    }

    #[test]
    fn ssm2_is_time_symmetric() {
        let f = seed_noise(&soliton(0.5, 512), 1e-3, 9);
        let g = ssm2_step_gn(&ssm2_step_gn(&f, 0.02).unwrap(), -0.02).unwrap();
        assert!(g.max_abs_diff(&f) < 1e-12);
    }

    #[test]
    fn lie_steps_are_conjugated_strang_steps() {
        // (D N)^n = D(dt/2) · (D(dt/2) N D(dt/2))^n · D(−dt/2)
        let f = seed_noise(&soliton(0.5, 512), 1e-3, 2);
        let dt = 0.02;
        let n = 25;
        let mut lie = SplitStep::new(Model::Gn, Scheme::Ssm1, &f, dt).unwrap();
        for _ in 0..n {
            lie.step();
        }
        let tr = Transform::new(512);
        let half = |field: &SpinorField, h: f64| {
            let mut s = tr.dft(field);
            for i in 0..512 {
                let [a, b] = gn_propagator(field.grid.k(i), h).apply([s.s1[i], s.s2[i]]);
                s.s1[i] = a;
                s.s2[i] = b;
            }
            tr.idft(&s)
        };
        let mut strang = SplitStep::new(Model::Gn, Scheme::Ssm2, &half(&f, -dt / 2.0), dt).unwrap();
        for _ in 0..n {
            strang.step();
        }
        let via = half(&strang.field(), dt / 2.0);
        assert!(via.max_abs_diff(&lie.field()) < 1e-12);
    }

    #[test]
    fn rk4_plane_wave_matches_taylor_polynomial() {
        let g = Grid::new(2.0 * PI, 64).unwrap();
        let eps = 1e-3;
        for &(k, dt) in &[(3.0, 0.05), (10.0, 0.02), (-7.0, 0.1)] {
            let f = SpinorField::from_fn(g, |x| (C64::from_polar(eps, k * x), C64::new(0.0, 0.0)));
            let mut s = Rk4Ps::new(&f, dt, true).unwrap();
            s.step();
            let z = C64::new(0.0, -k * dt);
            let taylor = C64::new(1.0, 0.0) + z + z * z / 2.0 + z * z * z / 6.0 + z * z * z * z / 24.0;
            let out = s.state();
            for j in 0..64 {
                assert!((out.c1[j] - f.c1[j] * taylor).norm() < 1e-14);
                assert!(out.c2[j].norm() < 1e-14);
            }
        }
    }

    #[test]
    fn rk4_with_mass_matches_matrix_taylor_polynomial() {
        // linear part u_t = −u_x − iv, v_t = v_x − iu in Fourier: A = −i[[k, 1], [1, −k]]
        let g = Grid::new(2.0 * PI, 32).unwrap();
        let (k, dt) = (4.0, 0.05);
        let eps = 1e-7;
        let f = SpinorField::from_fn(g, |x| (C64::from_polar(eps, k * x), C64::new(0.0, 0.0)));
        let mut s = Rk4Ps::new(&f, dt, false).unwrap();
        s.step();
        let i = C64::new(0.0, 1.0);
        let a = Mat2::new(-i * k, -i, -i, i * k).scale(C64::new(dt, 0.0));
        let mut term = Mat2::identity();
        let mut poly = Mat2::identity();
        for n in 1..=4 {
            term = (term * a).scale(C64::new(1.0 / n as f64, 0.0));
            poly = poly + term;
        }
        let [gu, gv] = poly.apply([C64::new(eps, 0.0), C64::new(0.0, 0.0)]);
        let out = s.state();
        for j in 0..32 {
            let e = C64::from_polar(1.0, k * g.x(j));
            // cubic terms are O(eps³)
            assert!((out.c1[j] - gu * e).norm() < 1e-18);
            assert!((out.c2[j] - gv * e).norm() < 1e-18);
        }
    }

    #[test]
    fn rk4_charge_drift_is_fifth_order() {
        let f = soliton(0.6, 512);
        let q = f.charge();
        let drift = |dt: f64| {
            let mut s = Rk4Ps::new(&psi_to_uv(&f), dt, false).unwrap();
            s.step();
            ((s.state().charge() - q) / q).abs()
        };
        let (a, b) = (drift(0.04), drift(0.02));
        assert!(a / b >= 16.0, "ratio {}", a / b);
    }

    #[test]
    fn noise_is_deterministic_and_bounded() {
        let f = soliton(0.5, 256);
        assert_eq!(seed_noise(&f, 0.0, 3), f);
        let a = seed_noise(&f, 1e-12, 3);
        assert_eq!(a, seed_noise(&f, 1e-12, 3));
        assert_ne!(a, seed_noise(&f, 1e-12, 4));
        assert!(a.max_abs_diff(&f) <= 2f64.sqrt() * 1e-12);
    }

    #[test]
    fn flat_spectrum_is_a_spike_at_the_origin() {
        let g = Grid::new(10.0, 64).unwrap();
        let z = SpinorField::zeros(g);
        assert_eq!(seed_flat_spectrum(&z, 0.0, None), z);
        let a = 1e-3;
        let f = seed_flat_spectrum(&z, a, None);
        let center = g.centered_index(0).unwrap();
        for j in 0..64 {
            let want = if j == center { a } else { 0.0 };
            assert!((f.c1[j] - want).norm() < 1e-15);
            assert!((f.c2[j] - want).norm() < 1e-15);
        }
    }

    #[test]
    fn config_validation_names_keys() {
        let mut c = gn_run(0.5, GridSpec::pi(4.0, 64), 0.01, 1.0);
        c.dt = None;
        let e = c.resolve().unwrap_err().to_string();
        assert!(e.contains("`dt`"), "{e}");
        let mut c = gn_run(0.5, GridSpec::pi(4.0, 64), 0.01, 0.001);
        assert!(c.resolve().unwrap_err().to_string().contains("t_max"));
        c.t_max = 1.0;
        c.cadence = Some(0);
        assert!(c.resolve().unwrap_err().to_string().contains("cadence"));
        let c = gn_run(1.5, GridSpec::pi(4.0, 64), 0.01, 1.0);
        assert!(c.resolve().unwrap_err().to_string().contains("omega"));
    }

    #[test]
    fn run_records_snapshots_and_tracks() {
        let mut c = gn_run(0.5, GridSpec::pi(4.0, 256), 0.01, 1.0);
        c.cadence = Some(30);
        c.store_spectra = true;
        c.bands = vec![BandSpec::kmax_fraction("edge", 0.95, 0.05)];
        let t = run_simulation(&c).unwrap();
        let steps: Vec<usize> = t.snapshots.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![0, 30, 60, 90, 100]);
        assert!(t.snapshots.windows(2).all(|w| w[0].t < w[1].t));
        assert_eq!(t.termination, Termination::Completed);
        assert_eq!(t.track("edge").unwrap().amplitudes.len(), 5);
        assert!(t.charge_drift() < 1e-13);

        let mut buf = Vec::new();
        t.write_spectra(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 * (2 + 5 * (1 + 4 * 256)));
        let back = read_spectra(&buf[..], t.grid.length()).unwrap();
        assert_eq!(back.len(), 5);
        assert_eq!(&back[2].1, t.snapshots[2].spectrum.as_ref().unwrap());
    }

    #[test]
    fn blow_up_is_reported_not_raised() {
        let mut c = gn_run(0.5, GridSpec::pi(4.0, 64), 0.01, 1.0);
        c.initial.scale = [2e6, 2e6];
        let t = run_simulation(&c).unwrap();
        assert!(matches!(t.termination, Termination::BlowUp { .. }));
        assert_eq!(t.snapshots.last().unwrap().step, t.steps_taken);
    }

    #[test]
    fn filter_removes_band() {
        let mut c = gn_run(0.5, GridSpec::pi(4.0, 256), 0.01, 0.5);
        c.noise_amplitude = 1e-6;
        c.store_spectra = true;
        c.filter = Some(BandFilter { k_lo: 50.0, k_hi: 1e9 });
        let t = run_simulation(&c).unwrap();
        let s = t.snapshots.last().unwrap().spectrum.as_ref().unwrap();
        for i in 0..256 {
            if t.grid.k(i).abs() >= 50.0 {
                assert_eq!(s.s1[i].norm(), 0.0);
            }
        }
    }
}
