//! Small dense 2×2 complex matrices: Pauli algebra, propagators and monodromy.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Row-major 2×2 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub const fn zero() -> Self {
        Mat2([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub const fn identity() -> Self {
        Mat2([[ONE, ZERO], [ZERO, ONE]])
    }

    pub const fn sigma1() -> Self {
        Mat2([[ZERO, ONE], [ONE, ZERO]])
    }

    pub const fn sigma2() -> Self {
        Mat2([[ZERO, C64::new(0.0, -1.0)], [I, ZERO]])
    }

    pub const fn sigma3() -> Self {
        Mat2([[ONE, ZERO], [ZERO, C64::new(-1.0, 0.0)]])
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Mat2([[a, ZERO], [ZERO, d]])
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.0[r][c]
    }

    #[inline]
    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        worst
    }

    /// Roots of λ² − tr·λ + det = 0, larger modulus first.
    pub fn eigenvalues(&self) -> [C64; 2] {
        let tr = self.trace();
        let det = self.det();
        let disc = (tr * tr - 4.0 * det).sqrt();
        // pick the sign that avoids cancellation, recover the other root from the product
        let q = if (tr.conj() * disc).re >= 0.0 {
            (tr + disc) * 0.5
        } else {
            (tr - disc) * 0.5
        };
        let other = if q.norm() > 0.0 { det / q } else { ZERO };
        if q.norm() >= other.norm() {
            [q, other]
        } else {
            [other, q]
        }
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues()[0].norm()
    }

    /// Largest singular value (the induced ℓ² norm).
    pub fn norm2(&self) -> f64 {
        // eigenvalues of the Hermitian A†A are real: (t ± sqrt(t² − 4 d)) / 2
        let h = self.adjoint() * *self;
        let t = h.trace().re;
        let d = h.det().re;
        let disc = (t * t - 4.0 * d).max(0.0).sqrt();
        (0.5 * (t + disc)).max(0.0).sqrt()
    }

    /// exp(G·s) for a trace-free G, using G² = −det(G)·I.
    pub fn expm_traceless(g: &Mat2, s: f64) -> Mat2 {
        let kappa = (-g.det()).sqrt();
        let z = kappa * s;
        let (ch, sh_over) = if z.norm() < 1e-6 {
            // series: cosh z ≈ 1 + z²/2, sinh(z)/κ ≈ s(1 + z²/6)
            let z2 = z * z;
            (ONE + z2 * 0.5 + z2 * z2 / 24.0, (ONE + z2 / 6.0 + z2 * z2 / 120.0) * s)
        } else {
            (z.cosh(), z.sinh() / kappa)
        };
        Mat2::identity().scale(ch) + g.scale(sh_over)
    }

    /// exp(G·s) for arbitrary G via its trace-free part.
    pub fn expm(g: &Mat2, s: f64) -> Mat2 {
        let half_tr = g.trace() * 0.5;
        let traceless = *g - Mat2::identity().scale(half_tr);
        Mat2::expm_traceless(&traceless, s).scale((half_tr * s).exp())
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + (-o)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}
