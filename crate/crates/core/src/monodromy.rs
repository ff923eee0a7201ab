//! Growth of a flat "noise floor" perturbation.
//!
//! A spatially uniform perturbation sees the soliton pass once per domain length,
//! so its amplitude vector obeys a 2×2 ODE with period `L`. The monodromy matrix
//! `Φ(L)` over one period gives the per-period amplification `ρ(Φ)`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::mat2::Mat2;
use crate::models::{BoxModel, GnSoliton, Model, ThirringSoliton};
use crate::par::{self, Execution};
use crate::spectral::Grid;
use crate::{Error, Result};

const I: C64 = C64::new(0.0, 1.0);

/// Agreement required between a run and the same run with half the step.
pub const HALVING_TOLERANCE: f64 = 1e-8;

/// Doublings tried before giving up on the halving check.
const MAX_REFINEMENTS: usize = 6;

/// `iσ3(Ω + ½[[Ψ1² − Ψ2², (Ψ1 − Ψ2)²], [(Ψ1 + Ψ2)², Ψ1² − Ψ2²]])`.
pub fn floor_generator_gn(omega: f64, p1: C64, p2: C64) -> Mat2 {
    let d = (p1 * p1 - p2 * p2) * 0.5 + omega;
    let up = (p1 - p2) * (p1 - p2) * 0.5;
    let lo = (p1 + p2) * (p1 + p2) * 0.5;
    Mat2::new(I * d, I * up, -I * lo, -I * d)
}

/// `iσ3(cos Q + P0)`; diagonal, so the flow is a pure phase.
pub fn floor_generator_thirring(frequency: f64, p0: f64) -> Mat2 {
    Mat2::diag(I * (frequency + p0), -I * (frequency + p0))
}

/// Maps `t` into `[−L/2, L/2)`.
pub fn wrap_time(t: f64, length: f64) -> f64 {
    (t + length / 2.0).rem_euclid(length) - length / 2.0
}

/// Default step count: at least 1000 and at least 20 per unit length.
pub fn default_steps(length: f64) -> usize {
    1000usize.max((20.0 * length).ceil() as usize)
}

/// Classical RK4 for `Y' = R(t)Y`, `Y(t0) = I`, over `[t0, t1]`.
pub fn rk4_fundamental(r: impl Fn(f64) -> Mat2, t0: f64, t1: f64, steps: usize) -> Mat2 {
    let h = (t1 - t0) / steps as f64;
    let hc = C64::new(h, 0.0);
    let half = C64::new(h / 2.0, 0.0);
    let mut y = Mat2::identity();
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        let rm = r(t + h / 2.0);
        let k1 = r(t) * y;
        let k2 = rm * (y + k1.scale(half));
        let k3 = rm * (y + k2.scale(half));
        let k4 = r(t + h) * (y + k3.scale(hc));
        y = y + (k1 + k2.scale(C64::new(2.0, 0.0)) + k3.scale(C64::new(2.0, 0.0)) + k4).scale(C64::new(h / 6.0, 0.0));
    }
    y
}

/// Monodromy matrix and the quantities derived from it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonodromyReport {
    pub model: Model,
    /// Ω for GN, Q for Thirring.
    pub parameter: f64,
    pub length: f64,
    pub phi: Mat2,
    pub rho: f64,
    /// Largest singular value.
    pub norm: f64,
    /// `|det Φ − 1|`.
    pub det_err: f64,
    /// `ln ρ / L`.
    pub growth_rate: f64,
    /// `π/Ω`: the period of `ρ` in `L` once the soliton is well inside the domain.
    pub period_hint: f64,
    pub steps: usize,
}

impl MonodromyReport {
    fn new(model: Model, parameter: f64, frequency: f64, length: f64, phi: Mat2, steps: usize) -> Self {
        let rho = phi.spectral_radius();
        MonodromyReport {
            model,
            parameter,
            length,
            phi,
            rho,
            norm: phi.norm2(),
            det_err: (phi.det() - 1.0).norm(),
            growth_rate: rho.ln() / length,
            period_hint: PI / frequency.abs(),
            steps,
        }
    }
}

fn check_length(length: f64) -> Result<()> {
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::param("length", format!("must be positive, got {length}")));
    }
    Ok(())
}

/// Runs `solve(n)` and `solve(2n)` until they agree to [`HALVING_TOLERANCE`].
fn with_halving(length: f64, steps: usize, solve: impl Fn(usize) -> Mat2) -> Result<(Mat2, usize)> {
    if steps < 1000 {
        return Err(Error::param("steps", format!("need at least 1000, got {steps}")));
    }
    let mut n = steps;
    let mut coarse = solve(n);
    let mut change = f64::INFINITY;
    for _ in 0..=MAX_REFINEMENTS {
        let fine = solve(2 * n);
        change = fine.max_abs_diff(&coarse);
        if change <= HALVING_TOLERANCE {
            return Ok((fine, 2 * n));
        }
        coarse = fine;
        n *= 2;
    }
    Err(Error::MonodromyNotConverged { length, steps: n, change })
}

/// Floor monodromy of the standing GN soliton, time origin at its center.
pub fn integrate_monodromy(omega: f64, length: f64, steps: Option<usize>) -> Result<MonodromyReport> {
    integrate_monodromy_shifted(omega, length, steps, 0.0)
}

/// As [`integrate_monodromy`] with the period starting at `origin` instead of 0.
pub fn integrate_monodromy_shifted(
    omega: f64,
    length: f64,
    steps: Option<usize>,
    origin: f64,
) -> Result<MonodromyReport> {
    check_length(length)?;
    let s = GnSoliton::standing(omega)?;
    let r = |t: f64| {
        let (p1, p2) = s.envelope_at(wrap_time(t, length));
        floor_generator_gn(omega, p1, p2)
    };
    let n = steps.unwrap_or_else(|| default_steps(length));
    let (phi, used) = with_halving(length, n, |k| rk4_fundamental(r, origin, origin + length, k))?;
    Ok(MonodromyReport::new(Model::Gn, omega, omega, length, phi, used))
}

/// Floor monodromy for the Thirring soliton. The generator is diagonal, so the
/// flow is `exp(iσ3 Θ)` with `Θ = ∫(cos Q + P0)`; the phase integral is taken
/// with the RK4 (Simpson) rule and the result is exactly unimodular.
pub fn floor_rate_thirring(q: f64, length: f64, steps: Option<usize>) -> Result<MonodromyReport> {
    check_length(length)?;
    let s = ThirringSoliton::new(q)?;
    let freq = s.frequency();
    let p0 = |t: f64| {
        let (u, v) = s.envelope_at(wrap_time(t, length));
        // P0 = (|Ψ1|² + |Ψ2|²)/2 and the u, v rotation is unitary
        0.5 * (u.norm_sqr() + v.norm_sqr())
    };
    let phase = |n: usize| {
        let h = length / n as f64;
        let mut th = 0.0;
        for k in 0..n {
            let t = k as f64 * h;
            th += h / 6.0 * (p0(t) + 4.0 * p0(t + h / 2.0) + p0(t + h)) + freq * h;
        }
        th
    };
    let n = steps.unwrap_or_else(|| default_steps(length));
    let (phi, used) = with_halving(length, n, |k| {
        let th = phase(k);
        Mat2::diag(C64::from_polar(1.0, th), C64::from_polar(1.0, -th))
    })?;
    Ok(MonodromyReport::new(Model::Thirring, q, freq, length, phi, used))
}

/// Box-model monodromy: closed-form exponentials with an RK4 cross-check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxReport {
    pub params: BoxModel,
    pub omega: f64,
    pub length: f64,
    /// Transfer matrix across the box alone.
    pub phi_box: Mat2,
    /// Moduli of the two roots of `λ² − 2|Φ11|cos(Ω(L − L_sol) + arg Φ11)λ + |Φ11|² − |Φ12|² = 0`.
    pub closed_form: [f64; 2],
    /// Full period from matrix exponentials.
    pub exact: MonodromyReport,
    /// Same period integrated by RK4 segment by segment.
    pub integrated: MonodromyReport,
}

impl BoxReport {
    pub fn phi11(&self) -> C64 {
        self.phi_box.get(0, 0)
    }

    pub fn phi12(&self) -> C64 {
        self.phi_box.get(0, 1)
    }
}

/// Generators on the `x < 0` and `x ≥ 0` halves of the box and outside it.
fn box_generators(params: &BoxModel, omega: f64) -> [Mat2; 3] {
    let h = params.l_sol / 4.0;
    let side = |x: f64| {
        let (p1, p2) = params.envelope_at(x);
        floor_generator_gn(omega, p1, p2)
    };
    [side(-h), side(h), floor_generator_gn(omega, C64::new(0.0, 0.0), C64::new(0.0, 0.0))]
}

pub fn box_model_monodromy(params: &BoxModel, omega: f64, length: f64, steps: Option<usize>) -> Result<BoxReport> {
    check_length(length)?;
    if !(length > params.l_sol) {
        return Err(Error::param("length", format!("must exceed the box width {}", params.l_sol)));
    }
    if !(omega > 0.0 && omega < 1.0) {
        return Err(Error::param("omega", format!("must lie in (0, 1), got {omega}")));
    }
    let [neg, pos, free] = box_generators(params, omega);
    let half = params.l_sol / 2.0;
    let gap = length - params.l_sol;
    // traverse x < 0, then x ≥ 0, then the empty rest of the period
    let phi_box = Mat2::expm_traceless(&pos, half) * Mat2::expm_traceless(&neg, half);
    let phi_free = Mat2::expm_traceless(&free, gap);
    let exact = MonodromyReport::new(Model::Gn, omega, omega, length, phi_free * phi_box, 0);

    let p11 = phi_box.get(0, 0);
    let p12 = phi_box.get(0, 1);
    let b = 2.0 * p11.norm() * (omega * gap + p11.arg()).cos();
    let c = p11.norm_sqr() - p12.norm_sqr();
    let roots = Mat2::new(C64::new(b, 0.0), C64::new(-c, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)).eigenvalues();

    let n = steps.unwrap_or_else(|| default_steps(length));
    let seg = |g: Mat2, len: f64, k: usize| {
        let k = ((k as f64 * len / length).ceil() as usize).max(1);
        rk4_fundamental(|_| g, 0.0, len, k)
    };
    let (phi, used) = with_halving(length, n, |k| seg(free, gap, k) * seg(pos, half, k) * seg(neg, half, k))?;
    let integrated = MonodromyReport::new(Model::Gn, omega, omega, length, phi, used);
    Ok(BoxReport { params: *params, omega, length, phi_box, closed_form: [roots[0].norm(), roots[1].norm()], exact, integrated })
}

/// One floor rate per length, in input order.
pub fn sweep_floor_rates(
    model: Model,
    parameter: f64,
    lengths: &[f64],
    steps: Option<usize>,
    exec: Execution,
) -> Result<Vec<MonodromyReport>> {
    par::map(exec, lengths, |&l| match model {
        Model::Gn => integrate_monodromy(parameter, l, steps),
        Model::Thirring => floor_rate_thirring(parameter, l, steps),
    })
    .into_iter()
    .collect()
}

/// Lengths `start, start + step, …` up to and including `stop` (within rounding).
pub fn length_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::param("step", format!("must be positive, got {step}")));
    }
    if stop < start {
        return Ok(Vec::new());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

pub const FLOOR_CSV_HEADER: &str = "model,omega_or_q,L,L_over_pi,rho,norm,det_err,growth_rate,steps";

pub fn floor_csv(rows: &[MonodromyReport]) -> String {
    let mut s = format!("{FLOOR_CSV_HEADER}\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{:.15e},{:.15e},{:e},{:e},{}\n",
            r.model.as_str(),
            r.parameter,
            r.length,
            r.length / PI,
            r.rho,
            r.norm,
            r.det_err,
            r.growth_rate,
            r.steps
        ));
    }
    s
}

pub const BOX_CSV_HEADER: &str =
    "omega,L,L_over_pi,A,B,L_sol,abs_phi11,abs_phi12,arg_phi11,lambda1,lambda2,rho,norm,det_err,growth_rate,rho_rk4";

pub fn box_csv(rows: &[BoxReport]) -> String {
    let mut s = format!("{BOX_CSV_HEADER}\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{:.15e},{:.15e},{},{:.15e},{:.15e},{:.15e},{:.15e},{:e},{:e},{:.15e}\n",
            r.omega,
            r.length,
            r.length / PI,
            r.params.a,
            r.params.b,
            r.params.l_sol,
            r.phi11().norm(),
            r.phi12().norm(),
            r.phi11().arg(),
            r.closed_form[0],
            r.closed_form[1],
            r.exact.rho,
            r.exact.norm,
            r.exact.det_err,
            r.exact.growth_rate,
            r.integrated.rho
        ));
    }
    s
}

/// Soliton support for the periodicity check: where the envelope falls below `tol`.
pub fn soliton_support(omega: f64, tol: f64) -> Result<f64> {
    let s = GnSoliton::standing(omega)?;
    let grid = Grid::new(200.0, 1 << 14)?;
    let mut last = 0.0f64;
    for j in grid.len() / 2..grid.len() {
        let x = grid.x(j);
        let (a, b) = s.envelope_at(x);
        if a.norm().max(b.norm()) >= tol {
            last = x;
        }
    }
    Ok(2.0 * last)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Mat2, b: Mat2, tol: f64) -> bool {
        a.max_abs_diff(&b) < tol
    }

    #[test]
    fn generator_examples() {
        let z = C64::new(0.0, 0.0);
        assert!(close(floor_generator_gn(0.3, z, z), Mat2::diag(I * 0.3, -I * 0.3), 1e-15));
        let g = floor_generator_gn(0.5, C64::new(1.0, 0.0), z);
        let want = Mat2::sigma3().scale(I) * Mat2::new(C64::new(1.0, 0.0), C64::new(0.5, 0.0), C64::new(0.5, 0.0), C64::new(1.0, 0.0));
        assert!(close(g, want, 1e-15));
        let s = GnSoliton::standing(0.4).unwrap();
        for &t in &[-3.0, -0.2, 0.7, 5.0] {
            let (a, b) = s.envelope_at(t);
            assert!(floor_generator_gn(0.4, a, b).trace().norm() < 1e-15);
        }
    }

    #[test]
    fn wrap_and_steps() {
        assert_eq!(wrap_time(0.0, 10.0), 0.0);
        assert!((wrap_time(6.0, 10.0) + 4.0).abs() < 1e-15);
        assert!((wrap_time(-5.0, 10.0) + 5.0).abs() < 1e-15);
        assert_eq!(default_steps(10.0), 1000);
        assert_eq!(default_steps(40.0 * PI), 2514);
    }

    #[test]
    fn free_flow_is_a_rotation() {
        let free = floor_generator_gn(0.6, C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let l = 17.0;
        let (phi, _) = with_halving(l, 1000, |k| rk4_fundamental(|_| free, 0.0, l, k)).unwrap();
        let want = Mat2::diag(C64::from_polar(1.0, 0.6 * l), C64::from_polar(1.0, -0.6 * l));
        assert!(close(phi, want, 1e-9));
        let r = MonodromyReport::new(Model::Gn, 0.6, 0.6, l, phi, 0);
        assert!((r.rho - 1.0).abs() < 1e-9);
        assert!(r.growth_rate.abs() < 1e-9);
    }

    #[test]
    fn report_invariants() {
        for &(w, l) in &[(0.35, 40.0 * PI), (0.75, 40.0 * PI + 3.1), (0.5, 20.0)] {
            let r = integrate_monodromy(w, l, None).unwrap();
            assert!(r.det_err < 1e-10, "det err {}", r.det_err);
            assert!(r.rho <= r.norm * (1.0 + 1e-12));
            assert!((r.growth_rate - r.rho.ln() / l).abs() < 1e-15);
            assert!((r.period_hint - PI / w).abs() < 1e-15);
        }
    }

    #[test]
    fn origin_shift_leaves_rho_unchanged() {
        let l = 40.0 * PI + 1.1;
        let a = integrate_monodromy(0.35, l, None).unwrap();
        let b = integrate_monodromy_shifted(0.35, l, None, 7.3).unwrap();
        assert!((a.rho - b.rho).abs() < 1e-9);
        assert!(a.phi.max_abs_diff(&b.phi) > 1e-3);
    }

    #[test]
    fn thirring_floor_is_neutral() {
        for &(q, l) in &[(0.35 * PI, 40.0 * PI), (0.1, 33.0), (2.5, 70.0)] {
            let r = floor_rate_thirring(q, l, None).unwrap();
            assert!((r.rho - 1.0).abs() < 1e-12);
            assert!(r.phi.get(0, 1).norm() == 0.0);
        }
    }

    #[test]
    fn too_few_steps_rejected() {
        assert!(integrate_monodromy(0.5, 10.0, Some(10)).unwrap_err().to_string().contains("steps"));
    }

    #[test]
    fn empty_box_is_free() {
        let b = BoxModel::new(0.0, 0.0, 2.0).unwrap();
        let r = box_model_monodromy(&b, 0.5, 30.0, None).unwrap();
        assert!((r.phi11() - C64::from_polar(1.0, 0.5 * 2.0)).norm() < 1e-14);
        assert!(r.phi12().norm() < 1e-14);
        assert!((r.closed_form[0] - 1.0).abs() < 1e-7 && (r.closed_form[1] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn box_closed_form_matches_exponentials_and_rk4() {
        let b = BoxModel::fit(&GnSoliton::standing(0.35).unwrap()).unwrap();
        for &l in &[40.0 * PI, 40.0 * PI + 1.1, 40.0 * PI + 3.1] {
            let r = box_model_monodromy(&b, 0.35, l, None).unwrap();
            let c = r.phi11().norm_sqr() - r.phi12().norm_sqr();
            assert!((c - 1.0).abs() < 1e-10);
            assert!((r.closed_form[0] - r.exact.rho).abs() < 1e-9);
            assert!((r.integrated.rho - r.exact.rho).abs() < 1e-7);
            assert!(r.exact.det_err < 1e-10);
        }
    }

    #[test]
    fn box_peak_modulus_is_the_norm() {
        let b = BoxModel::new(0.8, 0.4, 3.0).unwrap();
        let r0 = box_model_monodromy(&b, 0.5, 30.0, None).unwrap();
        let want = r0.phi11().norm() + r0.phi12().norm();
        assert!((want - r0.phi_box.norm2()).abs() < 1e-12);
        let best = (0..2000)
            .map(|i| 30.0 + i as f64 * (PI / 0.5) / 2000.0)
            .map(|l| box_model_monodromy(&b, 0.5, l, Some(1000)).unwrap().closed_form[0])
            .fold(0.0, f64::max);
        assert!((best - want).abs() < 1e-5, "{best} vs {want}");
    }

    #[test]
    fn ranges_and_csv() {
        assert!(length_range(5.0, 4.0, 0.1).unwrap().is_empty());
        assert_eq!(length_range(0.0, 1.0, 0.25).unwrap().len(), 5);
        assert_eq!(length_range(40.0 * PI, 41.0 * PI, 0.1).unwrap().len(), 32);
        assert_eq!(floor_csv(&[]).trim(), FLOOR_CSV_HEADER);
        let rows = sweep_floor_rates(Model::Gn, 0.5, &[30.0, 20.0], None, Execution::Parallel).unwrap();
        assert_eq!(rows[1].length, 20.0);
        assert_eq!(floor_csv(&rows).lines().count(), 3);
    }
}
