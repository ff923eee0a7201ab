//! Periodic grid, the centered DFT convention and free Dirac propagators.
//!
//! Spectra are always presented in centered order: storage index `i` holds the
//! coefficient of wavenumber `(i - N/2)·dk`. The forward transform is the plain
//! sum `ŝ(k) = Σ_j f(x_j) e^{-i k x_j}` and the inverse carries the `1/N`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::mat2::Mat2;
use crate::{Error, Result};

/// Uniform periodic grid on `[-L/2, L/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    length: f64,
    n: usize,
}

impl Grid {
    /// Point count must be a power of two and at least 4.
    pub fn new(length: f64, n: usize) -> Result<Grid> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("point count must be even and >= 4, got {n}")));
        }
        if !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("point count must be a power of two, got {n}")));
        }
        Ok(Grid { length, n })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn dk(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length
    }

    /// `π/dx`, equal to `N·dk/2`.
    pub fn k_max(&self) -> f64 {
        0.5 * self.n as f64 * self.dk()
    }

    pub fn half(&self) -> i64 {
        (self.n / 2) as i64
    }

    /// Position of storage index `j`, i.e. `(j - N/2)·dx`.
    pub fn x(&self, j: usize) -> f64 {
        (j as i64 - self.half()) as f64 * self.dx()
    }

    /// Wavenumber of centered storage index `i`.
    pub fn k(&self, i: usize) -> f64 {
        (i as i64 - self.half()) as f64 * self.dk()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    pub fn ks(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.k(i)).collect()
    }

    /// Wavenumber of natural FFT slot `p` (0, dk, ..., then negatives).
    pub fn k_natural(&self, p: usize) -> f64 {
        let m = if p < self.n / 2 { p as i64 } else { p as i64 - self.n as i64 };
        m as f64 * self.dk()
    }

    /// Centered storage index of harmonic `m` in `-N/2..N/2`.
    pub fn centered_index(&self, m: i64) -> Option<usize> {
        let i = m + self.half();
        (0..self.n as i64).contains(&i).then_some(i as usize)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L={:.6} N={} dx={:.6e}", self.length, self.n, self.dx())
    }
}

/// Two complex components sampled on a grid (ψ1, ψ2 or u, v).
#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField {
    pub grid: Grid,
    pub c1: Vec<C64>,
    pub c2: Vec<C64>,
}

impl SpinorField {
    pub fn new(grid: Grid, c1: Vec<C64>, c2: Vec<C64>) -> Result<SpinorField> {
        for c in [&c1, &c2] {
            if c.len() != grid.len() {
                return Err(Error::SizeMismatch { expected: grid.len(), got: c.len() });
            }
        }
        Ok(SpinorField { grid, c1, c2 })
    }

    pub fn zeros(grid: Grid) -> SpinorField {
        let z = vec![C64::new(0.0, 0.0); grid.len()];
        SpinorField { grid, c1: z.clone(), c2: z }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64) -> (C64, C64)) -> SpinorField {
        let (c1, c2) = (0..grid.len()).map(|j| f(grid.x(j))).unzip();
        SpinorField { grid, c1, c2 }
    }

    /// `Σ (|c1|² + |c2|²)·dx`.
    pub fn charge(&self) -> f64 {
        let s: f64 = self
            .c1
            .iter()
            .zip(&self.c2)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .sum();
        s * self.grid.dx()
    }

    /// Largest modulus of either component.
    pub fn max_abs(&self) -> f64 {
        self.c1
            .iter()
            .chain(&self.c2)
            .fold(0.0f64, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &SpinorField) -> f64 {
        self.c1
            .iter()
            .zip(&other.c1)
            .chain(self.c2.iter().zip(&other.c2))
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Multiply both components by `e^{-i·freq·t}`.
    pub fn with_phase(mut self, freq: f64, t: f64) -> SpinorField {
        let ph = C64::from_polar(1.0, -freq * t);
        for z in self.c1.iter_mut().chain(self.c2.iter_mut()) {
            *z *= ph;
        }
        self
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,re_c1,im_c1,re_c2,im_c2\n");
        for j in 0..self.grid.len() {
            let (a, b) = (self.c1[j], self.c2[j]);
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                self.grid.x(j),
                a.re,
                a.im,
                b.re,
                b.im
            ));
        }
        out
    }
}

/// Fourier coefficients in centered order.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumField {
    pub grid: Grid,
    pub s1: Vec<C64>,
    pub s2: Vec<C64>,
}

impl SpectrumField {
    pub fn new(grid: Grid, s1: Vec<C64>, s2: Vec<C64>) -> Result<SpectrumField> {
        for s in [&s1, &s2] {
            if s.len() != grid.len() {
                return Err(Error::SizeMismatch { expected: grid.len(), got: s.len() });
            }
        }
        Ok(SpectrumField { grid, s1, s2 })
    }

    /// Coefficient pair at harmonic `m` (wavenumber `m·dk`).
    pub fn at(&self, m: i64) -> Option<(C64, C64)> {
        self.grid.centered_index(m).map(|i| (self.s1[i], self.s2[i]))
    }
}

/// Cached forward/inverse plans for one point count.
#[derive(Clone)]
pub struct Transform {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transform").field("n", &self.n).finish()
    }
}

impl Transform {
    pub fn new(n: usize) -> Transform {
        let mut planner = FftPlanner::new();
        Transform {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized FFT in natural order, no reordering.
    pub fn fft_raw(&self, buf: &mut [C64]) {
        self.forward.process(buf);
    }

    /// Normalized inverse FFT in natural order.
    pub fn ifft_raw(&self, buf: &mut [C64]) {
        self.inverse.process(buf);
        let s = 1.0 / self.n as f64;
        for z in buf.iter_mut() {
            *z *= s;
        }
    }

    /// Centered samples → centered spectrum.
    pub fn dft_slice(&self, buf: &mut [C64]) {
        let h = self.n / 2;
        buf.rotate_left(h);
        self.forward.process(buf);
        buf.rotate_left(h);
    }

    /// Centered spectrum → centered samples.
    pub fn idft_slice(&self, buf: &mut [C64]) {
        let h = self.n / 2;
        buf.rotate_left(h);
        self.ifft_raw(buf);
        buf.rotate_left(h);
    }

    pub fn dft(&self, f: &SpinorField) -> SpectrumField {
        let (mut s1, mut s2) = (f.c1.clone(), f.c2.clone());
        self.dft_slice(&mut s1);
        self.dft_slice(&mut s2);
        SpectrumField { grid: f.grid, s1, s2 }
    }

    pub fn idft(&self, s: &SpectrumField) -> SpinorField {
        let (mut c1, mut c2) = (s.s1.clone(), s.s2.clone());
        self.idft_slice(&mut c1);
        self.idft_slice(&mut c2);
        SpinorField { grid: s.grid, c1, c2 }
    }

    /// Spectral x-derivative of centered samples, in place.
    pub fn derivative(&self, grid: &Grid, buf: &mut [C64]) {
        self.fft_raw(buf);
        for (p, z) in buf.iter_mut().enumerate() {
            *z *= C64::new(0.0, grid.k_natural(p));
        }
        self.ifft_raw(buf);
    }

    /// Converts a natural-order FFT of centered samples (as produced by
    /// `fft_raw` on the storage array) into the centered spectrum.
    pub fn natural_to_centered(&self, natural: &[C64], out: &mut [C64]) {
        let h = self.n / 2;
        for (i, o) in out.iter_mut().enumerate() {
            let m = i as i64 - h as i64;
            let p = m.rem_euclid(self.n as i64) as usize;
            // x_j = (j - N/2)dx contributes e^{iπm} relative to the raw FFT
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            *o = natural[p] * sign;
        }
    }
}

/// Forward transform of a field, planning on the fly.
pub fn dft(f: &SpinorField) -> SpectrumField {
    Transform::new(f.grid.len()).dft(f)
}

/// Inverse transform of a spectrum, planning on the fly.
pub fn idft(s: &SpectrumField) -> SpinorField {
    Transform::new(s.grid.len()).idft(s)
}

/// `exp(-iσ1·k·dt) = σ0 cos(k dt) - iσ1 sin(k dt)`.
pub fn gn_propagator(k: f64, dt: f64) -> Mat2 {
    let (s, c) = (k * dt).sin_cos();
    let d = C64::new(c, 0.0);
    let o = C64::new(0.0, -s);
    Mat2::new(d, o, o, d)
}

/// Linear flow of the Thirring model, `exp(i·dt·[[-k, 1], [1, k]])`.
pub fn thirring_propagator(k: f64, dt: f64) -> Mat2 {
    let gamma = (k * k + 1.0).sqrt();
    // k + γ loses precision for large negative k; use 1/(γ - k) instead
    let delta = if k >= 0.0 { k + gamma } else { 1.0 / (gamma - k) };
    let ep = C64::from_polar(1.0, gamma * dt);
    let em = ep.conj();
    let d2 = delta * delta;
    let norm = 1.0 / (1.0 + d2);
    Mat2::new(
        (ep + em * d2) * norm,
        (ep - em) * (delta * norm),
        (ep - em) * (delta * norm),
        (ep * d2 + em) * norm,
    )
}

/// GN free propagators for every wavenumber, centered order.
pub fn free_propagator_gn(grid: &Grid, dt: f64) -> Result<Vec<Mat2>> {
    check_dt(dt)?;
    Ok(grid.ks().into_iter().map(|k| gn_propagator(k, dt)).collect())
}

/// Thirring free propagators for every wavenumber, centered order.
pub fn free_propagator_thirring(grid: &Grid, dt: f64) -> Result<Vec<Mat2>> {
    check_dt(dt)?;
    Ok(grid.ks().into_iter().map(|k| thirring_propagator(k, dt)).collect())
}

fn check_dt(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(Error::param("dt", format!("must be positive, got {dt}")))
    }
}
