//! Analytic solitons, variable changes and the potentials of the linearized operators.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::spectral::{Grid, SpinorField};
use crate::{Error, Result};

/// Which nonlinear Dirac model a field or potential set belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Gn,
    Thirring,
}

impl Model {
    pub fn as_str(&self) -> &'static str {
        match self {
            Model::Gn => "gn",
            Model::Thirring => "thirring",
        }
    }
}

/// Gross–Neveu soliton: frequency, velocity and initial center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnSoliton {
    pub omega: f64,
    #[serde(default)]
    pub velocity: f64,
    #[serde(default)]
    pub x0: f64,
}

impl GnSoliton {
    pub fn standing(omega: f64) -> Result<GnSoliton> {
        GnSoliton::new(omega, 0.0, 0.0)
    }

    pub fn new(omega: f64, velocity: f64, x0: f64) -> Result<GnSoliton> {
        let s = GnSoliton { omega, velocity, x0 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega < 1.0) {
            return Err(Error::param("omega", format!("must lie in (0, 1), got {}", self.omega)));
        }
        if !(self.velocity.abs() < 1.0) {
            return Err(Error::param("velocity", format!("must lie in (-1, 1), got {}", self.velocity)));
        }
        if !self.x0.is_finite() {
            return Err(Error::param("x0", "must be finite"));
        }
        Ok(())
    }

    /// `√(1 − Ω²)`
    pub fn beta(&self) -> f64 {
        (1.0 - self.omega * self.omega).sqrt()
    }

    /// `√((1 − Ω)/(1 + Ω))`
    pub fn mu(&self) -> f64 {
        ((1.0 - self.omega) / (1.0 + self.omega)).sqrt()
    }

    /// Lorentz factor `1/√(1 − V²)`.
    pub fn lorentz(&self) -> f64 {
        1.0 / (1.0 - self.velocity * self.velocity).sqrt()
    }

    /// Standing envelope `(Ψ1, Ψ2)` at distance `x` from the center.
    pub fn envelope_at(&self, x: f64) -> (C64, C64) {
        let (b, mu) = (self.beta(), self.mu());
        // sech/tanh form: cosh² overflows far from the center
        let (sech, th) = (1.0 / (b * x).cosh(), (b * x).tanh());
        let p1 = (2.0 * (1.0 - self.omega)).sqrt() * sech / (1.0 - mu * mu * th * th);
        let p2 = C64::new(0.0, mu * th * p1);
        (C64::new(p1, 0.0), p2)
    }

    /// Standing envelope sampled on the grid, centered at `x0`, no time phase.
    pub fn envelope(&self, grid: Grid) -> SpinorField {
        SpinorField::from_fn(grid, |x| self.envelope_at(x - self.x0))
    }

    /// Full field at time `t`, boosted when the velocity is nonzero.
    pub fn field(&self, grid: Grid, t: f64) -> SpinorField {
        if self.velocity == 0.0 {
            return self.envelope(grid).with_phase(self.omega, t);
        }
        let g = self.lorentz();
        // spinor boost; the off-diagonal entry follows the sign of the velocity
        let diag = ((g + 1.0) / 2.0).sqrt();
        let off = self.velocity.signum() * ((g - 1.0) / 2.0).sqrt();
        SpinorField::from_fn(grid, |x| {
            let xm = g * (x - self.x0 - self.velocity * t);
            let tm = g * (t - self.velocity * (x - self.x0));
            let (p1, p2) = self.envelope_at(xm);
            let ph = C64::from_polar(1.0, -self.omega * tm);
            ((p1 * diag + p2 * off) * ph, (p1 * off + p2 * diag) * ph)
        })
    }
}

/// Thirring soliton shape parameter `Q ∈ [0, π]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThirringSoliton {
    pub q: f64,
}

impl ThirringSoliton {
    pub fn new(q: f64) -> Result<ThirringSoliton> {
        if !(0.0..=PI).contains(&q) {
            return Err(Error::param("q", format!("must lie in [0, pi], got {q}")));
        }
        Ok(ThirringSoliton { q })
    }

    pub fn frequency(&self) -> f64 {
        self.q.cos()
    }

    /// Envelope `(U, V)` at `x`, no time phase.
    pub fn envelope_at(&self, x: f64) -> (C64, C64) {
        let s = self.q.sin();
        let arg = x * s;
        if arg.abs() > 700.0 {
            return (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        }
        let u = C64::new(s, 0.0) / C64::new(arg, -self.q / 2.0).cosh();
        let v = C64::new(-s, 0.0) / C64::new(arg, self.q / 2.0).cosh();
        (u, v)
    }

    /// Envelope on the grid in u, v variables.
    pub fn envelope(&self, grid: Grid) -> SpinorField {
        SpinorField::from_fn(grid, |x| self.envelope_at(x))
    }

    /// Field in u, v variables at time `t`.
    pub fn field(&self, grid: Grid, t: f64) -> SpinorField {
        self.envelope(grid).with_phase(self.frequency(), t)
    }
}

/// `ψ1 = (u + v)/√2`, `ψ2 = (u − v)/√2`.
pub fn uv_to_psi(f: &SpinorField) -> SpinorField {
    rotate(f)
}

/// Inverse of [`uv_to_psi`]; the map is its own inverse.
pub fn psi_to_uv(f: &SpinorField) -> SpinorField {
    rotate(f)
}

fn rotate(f: &SpinorField) -> SpinorField {
    let (c1, c2) = f
        .c1
        .iter()
        .zip(&f.c2)
        .map(|(&a, &b)| ((a + b) * FRAC_1_SQRT_2, (a - b) * FRAC_1_SQRT_2))
        .unzip();
    SpinorField { grid: f.grid, c1, c2 }
}

/// Potentials of the linearized operator. `P1` and `Q2` vanish in both models.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSet {
    pub model: Model,
    pub grid: Grid,
    /// Ω for Gross–Neveu, cos Q for Thirring.
    pub frequency: f64,
    pub p0: Vec<C64>,
    pub p2: Vec<C64>,
    pub p3: Vec<C64>,
    pub q0: Vec<C64>,
    pub q1: Vec<C64>,
    pub q3: Vec<C64>,
}

/// Potentials from a standing GN envelope.
pub fn gn_potentials(profile: &SpinorField, omega: f64) -> PotentialSet {
    let n = profile.grid.len();
    let mut ps = empty_set(Model::Gn, profile.grid, omega, n);
    for j in 0..n {
        let (a, b) = (profile.c1[j], profile.c2[j]);
        let (na, nb) = (a.norm_sqr(), b.norm_sqr());
        ps.p0[j] = C64::new(0.5 * (na + nb), 0.0);
        ps.p2[j] = C64::new((a * b.conj()).im, 0.0);
        ps.p3[j] = C64::new(1.5 * (na - nb) - 1.0, 0.0);
        ps.q0[j] = (a * a + b * b) * 0.5;
        ps.q1[j] = -(a * b);
        ps.q3[j] = (a * a - b * b) * 0.5;
    }
    ps
}

/// Potentials from a Thirring envelope given in ψ variables.
pub fn thirring_potentials(profile: &SpinorField, q: f64) -> PotentialSet {
    let n = profile.grid.len();
    let mut ps = empty_set(Model::Thirring, profile.grid, q.cos(), n);
    for j in 0..n {
        let (a, b) = (profile.c1[j], profile.c2[j]);
        let (na, nb) = (a.norm_sqr(), b.norm_sqr());
        ps.p0[j] = C64::new(0.5 * (na + nb), 0.0);
        ps.p2[j] = C64::new(-(a * b.conj()).im, 0.0);
        ps.p3[j] = C64::new(0.5 * (na - nb) + 1.0, 0.0);
        ps.q3[j] = (a * a - b * b) * 0.5;
    }
    ps
}

fn empty_set(model: Model, grid: Grid, frequency: f64, n: usize) -> PotentialSet {
    let z = vec![C64::new(0.0, 0.0); n];
    PotentialSet {
        model,
        grid,
        frequency,
        p0: z.clone(),
        p2: z.clone(),
        p3: z.clone(),
        q0: z.clone(),
        q1: z.clone(),
        q3: z,
    }
}

impl GnSoliton {
    /// Potentials of the standing soliton on `grid`.
    pub fn potentials(&self, grid: Grid) -> PotentialSet {
        gn_potentials(&GnSoliton { x0: 0.0, velocity: 0.0, ..*self }.envelope(grid), self.omega)
    }
}

impl ThirringSoliton {
    pub fn potentials(&self, grid: Grid) -> PotentialSet {
        thirring_potentials(&uv_to_psi(&self.envelope(grid)), self.q)
    }
}

/// Piecewise-constant stand-in for the soliton: `Ψ1 = A`, `Ψ2 = ±iB` on `[0, ±L_sol/2]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxModel {
    pub a: f64,
    pub b: f64,
    pub l_sol: f64,
}

impl BoxModel {
    /// Amplitudes may be zero (the free problem); the support must be positive.
    pub fn new(a: f64, b: f64, l_sol: f64) -> Result<BoxModel> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::param("a", format!("must be non-negative, got {a}")));
        }
        if !(b >= 0.0 && b.is_finite()) {
            return Err(Error::param("b", format!("must be non-negative, got {b}")));
        }
        if !(l_sol > 0.0 && l_sol.is_finite()) {
            return Err(Error::param("l_sol", format!("must be positive, got {l_sol}")));
        }
        Ok(BoxModel { a, b, l_sol })
    }

    /// Matches a GN soliton: `A = Ψ1(0)`, `B = max|Ψ2|`, equal charge.
    pub fn fit(soliton: &GnSoliton) -> Result<BoxModel> {
        let s = GnSoliton { velocity: 0.0, x0: 0.0, ..*soliton };
        let a = s.envelope_at(0.0).0.re;
        // |Ψ2| peaks where d/dx[tanh·Ψ1] = 0; a fine scan over a few widths is enough
        let width = 1.0 / s.beta();
        let samples = 20_000;
        let span = 12.0 * width;
        let b = (0..=samples)
            .map(|i| s.envelope_at(span * i as f64 / samples as f64).1.norm())
            .fold(0.0f64, f64::max);
        let charge = s.charge();
        BoxModel::new(a, b, charge / (a * a + b * b))
    }

    /// `A² + B²`
    pub fn c(&self) -> f64 {
        self.a * self.a + self.b * self.b
    }

    /// `2·arctan(B/A)`
    pub fn phi(&self) -> f64 {
        2.0 * self.b.atan2(self.a)
    }

    /// `(Ψ1, Ψ2)` of the box at signed distance `x` from its center.
    pub fn envelope_at(&self, x: f64) -> (C64, C64) {
        if x.abs() > self.l_sol / 2.0 {
            return (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        }
        let sign = if x >= 0.0 { 1.0 } else { -1.0 };
        (C64::new(self.a, 0.0), C64::new(0.0, sign * self.b))
    }

    /// The 2×2 coupling matrix on the side `x ≥ 0` (`positive`) or `x < 0`.
    pub fn coupling(&self, positive: bool) -> [[C64; 2]; 2] {
        let c = C64::new(self.c(), 0.0);
        let s = if positive { 1.0 } else { -1.0 };
        let e = C64::from_polar(self.c(), s * self.phi());
        [[c, e], [e.conj(), c]]
    }
}

impl GnSoliton {
    /// `∫ (|Ψ1|² + |Ψ2|²) dx = 2β/Ω` for the standing soliton.
    pub fn charge(&self) -> f64 {
        2.0 * self.beta() / self.omega
    }
}
