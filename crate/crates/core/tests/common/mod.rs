//! Independent x-space evaluation of the edge coupling, shared by test targets.

#![allow(dead_code)]

use std::f64::consts::PI;

use dirac_ssm::edge::{EdgeProblem, HarmonicTable};
use dirac_ssm::models::Model;
use dirac_ssm::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const I: C64 = C64::new(0.0, 1.0);

fn random_c(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn random_table(rng: &mut ChaCha8Rng, m: usize) -> HarmonicTable {
    let half = 2 * m as i64;
    HarmonicTable::new(-half, (0..=2 * half).map(|_| random_c(rng)).collect())
}

/// Edge problem whose potential spectra are random over `-2M..=2M`.
pub fn random_problem(m: usize, n: usize, seed: u64) -> EdgeProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    EdgeProblem {
        model: Model::Gn,
        m,
        frequency: 0.4,
        length: 7.3,
        n,
        p0: random_table(&mut rng, m),
        p2: random_table(&mut rng, m),
        p3: random_table(&mut rng, m),
        q0: random_table(&mut rng, m),
        q1: random_table(&mut rng, m),
        q3: random_table(&mut rng, m),
    }
}

pub fn random_state(m: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    (0..4 * m).map(|_| random_c(&mut rng)).collect()
}

/// `C s / N` computed by building every field on the grid, multiplying pointwise
/// and projecting back onto single harmonics.
pub fn coupling_in_x(p: &EdgeProblem, s: &[C64]) -> Vec<C64> {
    let (m, n) = (p.m, p.n);
    let dk = 2.0 * PI / p.length;
    let dx = p.length / n as f64;
    let xs: Vec<f64> = (0..n).map(|j| (j as f64 - n as f64 / 2.0) * dx).collect();
    let nf = n as f64;
    let synth = |t: &HarmonicTable| -> Vec<C64> {
        xs.iter()
            .map(|&x| (t.lo()..=t.hi()).map(|h| t.get(h).unwrap() * C64::from_polar(1.0, dk * h as f64 * x)).sum::<C64>() / nf)
            .collect()
    };
    let (p0, p2, p3, q0, q1, q3) = (synth(&p.p0), synth(&p.p2), synth(&p.p3), synth(&p.q0), synth(&p.q1), synth(&p.q3));
    let block = |b: usize| &s[b * m..(b + 1) * m];
    let (ap_hat, bm_hat) = (block(0), block(1));
    let am_hat: Vec<C64> = block(2).iter().map(|z| z.conj()).collect();
    let bp_hat: Vec<C64> = block(3).iter().map(|z| z.conj()).collect();
    // a-type fields carry harmonics -l, b-type fields harmonics l-1.
    let a_field = |c: &[C64]| -> Vec<C64> {
        xs.iter()
            .map(|&x| (1..=m).map(|l| c[l - 1] * C64::from_polar(1.0, -dk * l as f64 * x)).sum::<C64>() / nf)
            .collect()
    };
    let b_field = |c: &[C64]| -> Vec<C64> {
        xs.iter()
            .map(|&x| (1..=m).map(|l| c[l - 1] * C64::from_polar(1.0, dk * (l as f64 - 1.0) * x)).sum::<C64>() / nf)
            .collect()
    };
    let (ap, bm, am, bp) = (a_field(ap_hat), b_field(bm_hat), a_field(&am_hat), b_field(&bp_hat));
    let harmonic = |g: &[C64], h: i64| -> C64 {
        xs.iter().zip(g).map(|(&x, &v)| v * C64::from_polar(1.0, -dk * h as f64 * x)).sum()
    };
    let mut g1 = vec![C64::new(0.0, 0.0); n];
    let mut g2 = g1.clone();
    let mut g3 = g1.clone();
    let mut g4 = g1.clone();
    for j in 0..n {
        let pi23 = I * p2[j] + p3[j];
        let pmi23 = -I * p2[j] + p3[j];
        g1[j] = p0[j] * ap[j] + pi23 * bm[j] + q3[j] * am[j].conj() + (q0[j] + q1[j]) * bp[j].conj();
        g2[j] = pmi23 * ap[j] + p0[j] * bm[j] + (q0[j] - q1[j]) * am[j].conj() + q3[j] * bp[j].conj();
        g3[j] = q3[j] * ap[j].conj() + (q0[j] - q1[j]) * bm[j].conj() + p0[j] * am[j] + pmi23 * bp[j];
        g4[j] = (q0[j] + q1[j]) * ap[j].conj() + q3[j] * bm[j].conj() + pi23 * am[j] + p0[j] * bp[j];
    }
    let mut out = Vec::with_capacity(4 * m);
    out.extend((1..=m).map(|j| harmonic(&g1, -(j as i64))));
    out.extend((1..=m).map(|j| harmonic(&g2, j as i64 - 1)));
    out.extend((1..=m).map(|j| -harmonic(&g3, -(j as i64)).conj()));
    out.extend((1..=m).map(|j| -harmonic(&g4, j as i64 - 1).conj()));
    out
}

/// `C s / N` from the assembled Toeplitz/Hankel matrix.
pub fn coupling_assembled(p: &EdgeProblem, s: &[C64]) -> Vec<C64> {
    let c = p.coupling().unwrap();
    (0..c.nrows()).map(|r| (0..c.ncols()).map(|k| c[(r, k)] * s[k]).sum()).collect()
}

/// Largest entrywise gap between the two evaluations, relative to the largest entry.
pub fn oracle_gap(m: usize, n: usize, seed: u64) -> f64 {
    let p = random_problem(m, n, seed);
    let s = random_state(m, seed);
    let x = coupling_in_x(&p, &s);
    let a = coupling_assembled(&p, &s);
    let scale = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    x.iter().zip(&a).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max) / scale
}
