//! Linear stability of perturbations living at the edges of the spectral window.
//!
//! A perturbation near `+k_max` is written as `M` harmonics with negative offsets
//! (`a`), and one near `-k_max` as `M` harmonics with non-negative offsets (`b`).
//! Each splits into `e₊ = (1, 1)` and `e₋ = (1, −1)` components. The state
//! `(â₊, b̂₋, â₋*, b̂₊*)` obeys `s_t = i(D + C/N) s`, where `D` is diagonal and
//! `C` is assembled from Toeplitz and Hankel blocks of the potentials' spectra.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::models::{GnSoliton, Model, PotentialSet, ThirringSoliton};
use crate::par::{self, Execution};
use crate::spectral::{Grid, Transform};
use crate::{Error, Result};

const I: C64 = C64::new(0.0, 1.0);

/// Fourier coefficients `f̂_n` for `n` in `lo..=hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicTable {
    lo: i64,
    values: Vec<C64>,
}

impl HarmonicTable {
    pub fn new(lo: i64, values: Vec<C64>) -> HarmonicTable {
        HarmonicTable { lo, values }
    }

    /// Slice `-half..=half` out of a centered spectrum.
    pub fn from_centered(spectrum: &[C64], half: i64) -> Result<HarmonicTable> {
        let n = spectrum.len() as i64;
        if 2 * half >= n {
            return Err(Error::HarmonicOutOfRange { index: half, lo: -n / 2, hi: n / 2 - 1 });
        }
        let c = n / 2;
        Ok(HarmonicTable { lo: -half, values: spectrum[(c - half) as usize..=(c + half) as usize].to_vec() })
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    pub fn get(&self, index: i64) -> Result<C64> {
        let (lo, hi) = (self.lo, self.hi());
        if index < lo || index > hi {
            return Err(Error::HarmonicOutOfRange { index, lo, hi });
        }
        Ok(self.values[(index - lo) as usize])
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> HarmonicTable {
        HarmonicTable { lo: self.lo, values: self.values.iter().map(|&z| f(z)).collect() }
    }

    /// Pointwise `a·self + b·other`; both tables must cover the same range.
    fn combine(&self, a: C64, other: &HarmonicTable, b: C64) -> HarmonicTable {
        debug_assert_eq!((self.lo, self.values.len()), (other.lo, other.values.len()));
        HarmonicTable {
            lo: self.lo,
            values: self.values.iter().zip(&other.values).map(|(&x, &y)| a * x + b * y).collect(),
        }
    }
}

fn block_step(m: usize, from: i64, to: i64) -> Result<i64> {
    if m < 2 {
        return Err(Error::param("harmonics", "blocks need at least two harmonics"));
    }
    let span = to - from;
    let den = 2 * (m as i64 - 1);
    if span.abs() != den {
        return Err(Error::param("harmonics", format!("index range {from}..{to} does not fit M = {m}")));
    }
    Ok(span / den)
}

/// `M×M` Toeplitz block: entry `(j, l)` is `f̂` at `c + s(l − j)`, so the
/// lower-left entry sits at index `lo` and the upper-right at `hi`.
pub fn toeplitz_block(f: &HarmonicTable, m: usize, lo: i64, hi: i64) -> Result<Mat<C64>> {
    let s = block_step(m, lo, hi)?;
    let c = (lo + hi) / 2;
    f.get(lo)?;
    f.get(hi)?;
    Ok(Mat::from_fn(m, m, |j, l| f.get(c + s * (l as i64 - j as i64)).expect("range checked")))
}

/// `M×M` Hankel block: upper-left entry at index `first`, lower-right at `last`.
pub fn hankel_block(f: &HarmonicTable, m: usize, first: i64, last: i64) -> Result<Mat<C64>> {
    let s = block_step(m, first, last)?;
    f.get(first)?;
    f.get(last)?;
    Ok(Mat::from_fn(m, m, |j, l| f.get(first + s * (j + l) as i64).expect("range checked")))
}

/// Spectra and scales defining one edge eigenproblem.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeProblem {
    pub model: Model,
    /// Harmonics kept per block.
    pub m: usize,
    /// Ω for GN, cos Q for Thirring.
    pub frequency: f64,
    pub length: f64,
    /// Grid points the spectra were computed on.
    pub n: usize,
    pub p0: HarmonicTable,
    pub p2: HarmonicTable,
    pub p3: HarmonicTable,
    pub q0: HarmonicTable,
    pub q1: HarmonicTable,
    pub q3: HarmonicTable,
}

impl EdgeProblem {
    /// Spectra of `potentials` on their full grid, sliced to `-2M..=2M`.
    pub fn from_potentials(ps: &PotentialSet, m: usize) -> Result<EdgeProblem> {
        let n = ps.grid.len();
        if m < 4 || m > n / 8 {
            return Err(Error::param("harmonics", format!("need 4 <= M <= N/8 = {}, got {m}", n / 8)));
        }
        let tr = Transform::new(n);
        let table = |f: &[C64]| {
            let mut buf = f.to_vec();
            tr.dft_slice(&mut buf);
            HarmonicTable::from_centered(&buf, 2 * m as i64)
        };
        Ok(EdgeProblem {
            model: ps.model,
            m,
            frequency: ps.frequency,
            length: ps.grid.length(),
            n,
            p0: table(&ps.p0)?,
            p2: table(&ps.p2)?,
            p3: table(&ps.p3)?,
            q0: table(&ps.q0)?,
            q1: table(&ps.q1)?,
            q3: table(&ps.q3)?,
        })
    }

    pub fn gn(omega: f64, length: f64, n: usize, m: usize) -> Result<EdgeProblem> {
        let grid = Grid::new(length, n)?;
        EdgeProblem::from_potentials(&GnSoliton::standing(omega)?.potentials(grid), m)
    }

    pub fn thirring(q: f64, length: f64, n: usize, m: usize) -> Result<EdgeProblem> {
        let grid = Grid::new(length, n)?;
        EdgeProblem::from_potentials(&ThirringSoliton::new(q)?.potentials(grid), m)
    }

    pub fn dk(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// The sixteen raw coupling blocks, row by row; the `1/N` factor is not applied.
    pub fn coupling_blocks(&self) -> Result<[[Mat<C64>; 4]; 4]> {
        let m = self.m;
        let mi = m as i64;
        let one = C64::new(1.0, 0.0);
        let pi23 = self.p2.combine(I, &self.p3, one);
        let pmi23 = self.p2.combine(-I, &self.p3, one);
        let q0p1 = self.q0.combine(one, &self.q1, one);
        let q0m1 = self.q0.combine(one, &self.q1, -one);
        let cj = |t: &HarmonicTable| t.map(|z| -z.conj());
        let t = |f: &HarmonicTable, a, b| toeplitz_block(f, m, a, b);
        let h = |f: &HarmonicTable, a, b| hankel_block(f, m, a, b);
        Ok([
            [t(&self.p0, -(mi - 1), mi - 1)?, h(&pi23, -1, -2 * mi + 1)?, h(&self.q3, -2, -2 * mi)?, t(&q0p1, -mi, mi - 2)?],
            [h(&pmi23, 1, 2 * mi - 1)?, t(&self.p0, mi - 1, -(mi - 1))?, t(&q0m1, mi - 2, -mi)?, h(&self.q3, 0, 2 * mi - 2)?],
            [
                h(&cj(&self.q3), -2, -2 * mi)?,
                t(&cj(&q0m1), -mi, mi - 2)?,
                t(&cj(&self.p0), -(mi - 1), mi - 1)?,
                h(&cj(&pmi23), -1, -2 * mi + 1)?,
            ],
            [
                t(&cj(&q0p1), mi - 2, -mi)?,
                h(&cj(&self.q3), 0, 2 * mi - 2)?,
                h(&cj(&pi23), 1, 2 * mi - 1)?,
                t(&cj(&self.p0), mi - 1, -(mi - 1))?,
            ],
        ])
    }

    /// Diagonal of `D`: `dk·j ± Ω` and `dk(j−1) ± Ω`, `j = 1..M`.
    pub fn free_diagonal(&self) -> Vec<f64> {
        let (dk, w) = (self.dk(), self.frequency);
        let mut d = Vec::with_capacity(4 * self.m);
        for (shift, sign) in [(0.0, 1.0), (1.0, 1.0), (0.0, -1.0), (1.0, -1.0)] {
            d.extend((1..=self.m).map(|j| dk * (j as f64 - shift) + sign * w));
        }
        d
    }

    /// The coupling `C/N` as a dense `4M×4M` matrix.
    pub fn coupling(&self) -> Result<Mat<C64>> {
        let blocks = self.coupling_blocks()?;
        let m = self.m;
        let scale = 1.0 / self.n as f64;
        Ok(Mat::from_fn(4 * m, 4 * m, |r, c| blocks[r / m][c / m][(r % m, c % m)] * scale))
    }

    /// `i(D + C/N)`.
    pub fn operator(&self) -> Result<Mat<C64>> {
        let mut a = self.coupling()?;
        for (i, d) in self.free_diagonal().into_iter().enumerate() {
            a[(i, i)] += d;
        }
        Ok(Mat::from_fn(a.nrows(), a.ncols(), |r, c| I * a[(r, c)]))
    }
}

/// Most unstable mode, in the four `M`-blocks of the state vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeMode {
    pub a_plus: Vec<C64>,
    pub b_minus: Vec<C64>,
    /// Conjugated in the state vector; stored here unconjugated.
    pub a_minus: Vec<C64>,
    pub b_plus: Vec<C64>,
}

impl EdgeMode {
    /// Rows `index, |â₊|, |â₋|, |b̂₊|, |b̂₋|`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,abs_a_plus,abs_a_minus,abs_b_plus,abs_b_minus\n");
        for j in 0..self.a_plus.len() {
            s.push_str(&format!(
                "{},{:e},{:e},{:e},{:e}\n",
                j + 1,
                self.a_plus[j].norm(),
                self.a_minus[j].norm(),
                self.b_plus[j].norm(),
                self.b_minus[j].norm()
            ));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenReport {
    pub model: Model,
    pub frequency: f64,
    pub length: f64,
    pub m: usize,
    pub n: usize,
    pub eigenvalues: Vec<C64>,
    pub max_re: f64,
    pub second_re: f64,
    pub mode: Option<EdgeMode>,
}

impl EigenReport {
    pub fn growth_rate(&self) -> f64 {
        self.max_re
    }
}

fn solve_failed(p: &EdgeProblem) -> Error {
    Error::EigenSolver { frequency: p.frequency, length: p.length, harmonics: p.m }
}

/// Full spectrum of `i(D + C/N)`, plus the most unstable eigenvector when asked.
pub fn solve_edge_instability(p: &EdgeProblem, with_mode: bool) -> Result<EigenReport> {
    let a = p.operator()?;
    let (eigenvalues, mode) = if with_mode {
        let e = a.eigen().map_err(|_| solve_failed(p))?;
        let vals: Vec<C64> = e.S().column_vector().iter().copied().collect();
        let best = argmax_re(&vals).ok_or_else(|| solve_failed(p))?;
        let u = e.U();
        let m = p.m;
        let col = |b: usize, conj: bool| -> Vec<C64> {
            (0..m).map(|j| if conj { u[(b * m + j, best)].conj() } else { u[(b * m + j, best)] }).collect()
        };
        let mode = EdgeMode { a_plus: col(0, false), b_minus: col(1, false), a_minus: col(2, true), b_plus: col(3, true) };
        (vals, Some(mode))
    } else {
        (a.eigenvalues().map_err(|_| solve_failed(p))?, None)
    };
    if eigenvalues.iter().any(|z| !z.re.is_finite()) {
        return Err(solve_failed(p));
    }
    let mut re: Vec<f64> = eigenvalues.iter().map(|z| z.re).collect();
    re.sort_by(|a, b| b.total_cmp(a));
    Ok(EigenReport {
        model: p.model,
        frequency: p.frequency,
        length: p.length,
        m: p.m,
        n: p.n,
        max_re: re[0],
        second_re: re.get(1).copied().unwrap_or(f64::NEG_INFINITY),
        eigenvalues,
        mode,
    })
}

fn argmax_re(v: &[C64]) -> Option<usize> {
    (0..v.len()).max_by(|&a, &b| v[a].re.total_cmp(&v[b].re))
}

/// Grid size scaled with the domain from `4096` points at `L = 40π`, rounded to a power of two.
pub fn default_points(length: f64) -> usize {
    let ratio = 4096.0 * length / (40.0 * PI);
    let p = ratio.log2().round().max(6.0) as u32;
    1usize << p
}

/// Harmonic count: `128`, or more when `dk` is small enough that the unstable
/// mode spans more than 128 harmonics.
pub fn default_harmonics(length: f64) -> usize {
    let dk = 2.0 * PI / length;
    128usize.max((3.2 / dk).ceil() as usize)
}

/// How a sweep picks `N` and `M` per length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Fixed grid size; otherwise [`default_points`].
    #[serde(default)]
    pub points: Option<usize>,
    /// Fixed harmonic count; otherwise [`default_harmonics`].
    #[serde(default)]
    pub harmonics: Option<usize>,
    /// Double `M` until the rate changes by less than 2%, up to `max_harmonics`.
    #[serde(default)]
    pub converge: bool,
    #[serde(default = "default_max_harmonics")]
    pub max_harmonics: usize,
}

fn default_max_harmonics() -> usize {
    512
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { points: None, harmonics: None, converge: false, max_harmonics: default_max_harmonics() }
    }
}

/// One row of an edge sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeRow {
    pub length: f64,
    pub dk: f64,
    pub m: usize,
    pub n: usize,
    pub max_re: f64,
    pub second_re: f64,
    /// False when the `M`-doubling check ran and did not settle.
    pub converged: bool,
}

fn problem(model: Model, param: f64, length: f64, n: usize, m: usize) -> Result<EdgeProblem> {
    match model {
        Model::Gn => EdgeProblem::gn(param, length, n, m),
        Model::Thirring => EdgeProblem::thirring(param, length, n, m),
    }
}

/// Edge growth rate at one length.
pub fn edge_rate(model: Model, param: f64, length: f64, opts: &SweepOptions) -> Result<EdgeRow> {
    let n = opts.points.unwrap_or_else(|| default_points(length));
    let mut m = opts.harmonics.unwrap_or_else(|| default_harmonics(length)).min(n / 8);
    let mut r = solve_edge_instability(&problem(model, param, length, n, m)?, false)?;
    let mut converged = true;
    if opts.converge {
        converged = false;
        while 2 * m <= opts.max_harmonics.min(n / 8) {
            let next = solve_edge_instability(&problem(model, param, length, n, 2 * m)?, false)?;
            let change = (next.max_re - r.max_re).abs() / next.max_re.abs().max(1e-12);
            m *= 2;
            r = next;
            if change < 0.02 {
                converged = true;
                break;
            }
        }
    }
    Ok(EdgeRow {
        length,
        dk: 2.0 * PI / length,
        m: r.m,
        n,
        max_re: r.max_re,
        second_re: r.second_re,
        converged,
    })
}

/// Rates for each length, in input order.
pub fn sweep_edge_rates(
    model: Model,
    param: f64,
    lengths: &[f64],
    opts: &SweepOptions,
    exec: Execution,
) -> Result<Vec<EdgeRow>> {
    par::map(exec, lengths, |&l| edge_rate(model, param, l, opts)).into_iter().collect()
}

pub const EDGE_CSV_HEADER: &str = "L,L_over_pi,dk,M,N,max_Re_lambda,second_Re_lambda,converged";

pub fn edge_csv(rows: &[EdgeRow]) -> String {
    let mut s = format!("{EDGE_CSV_HEADER}\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{:e},{:e},{}\n",
            r.length,
            r.length / PI,
            r.dk,
            r.m,
            r.n,
            r.max_re,
            r.second_re,
            r.converged
        ));
    }
    s
}
