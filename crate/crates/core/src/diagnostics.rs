//! Spectral measurements: resonances, band tracking, growth fits and mode shapes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::spectral::{Grid, SpectrumField, SpinorField, Transform};
use crate::{Error, Result};

/// Wavenumbers `nπ/dt`, `n ≥ 1`, strictly below `k_max`.
pub fn resonant_wavenumbers(dt: f64, k_max: f64) -> Vec<f64> {
    if !(dt > 0.0) {
        return Vec::new();
    }
    (1..)
        .map(|n| n as f64 * PI / dt)
        .take_while(|&k| k < k_max)
        .collect()
}

/// Time step above which resonant wavenumbers enter the spectral window.
pub fn cfl_threshold(dx: f64) -> f64 {
    dx
}

/// Max modulus per component over ladder points with `|k - center| ≤ halfwidth`.
pub fn band_amplitude(s: &SpectrumField, k_center: f64, k_halfwidth: f64) -> Result<[f64; 2]> {
    let (lo, hi) = (k_center - k_halfwidth, k_center + k_halfwidth);
    let idx = ladder_range(&s.grid, lo, hi).ok_or(Error::EmptyBand { lo, hi })?;
    let mut out = [0.0f64; 2];
    for i in idx {
        out[0] = out[0].max(s.s1[i].norm());
        out[1] = out[1].max(s.s2[i].norm());
    }
    Ok(out)
}

/// Centered indices whose wavenumber lies in `[lo, hi]`, or `None` if empty.
pub fn ladder_range(grid: &Grid, lo: f64, hi: f64) -> Option<std::ops::RangeInclusive<usize>> {
    let dk = grid.dk();
    let h = grid.half();
    let first = ((lo / dk).ceil() as i64).max(-h);
    let last = ((hi / dk).floor() as i64).min(h - 1);
    // guard against rounding right at a ladder point
    let first = if (first - 1) as f64 * dk >= lo - 1e-12 * dk.max(1.0) && first > -h {
        first - 1
    } else {
        first
    };
    let last = if (last + 1) as f64 * dk <= hi + 1e-12 * dk.max(1.0) && last + 1 < h {
        last + 1
    } else {
        last
    };
    (first <= last).then(|| (first + h) as usize..=(last + h) as usize)
}

/// How a band's center is given in a scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub label: String,
    /// Absolute wavenumber.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    /// Fraction of `k_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_kmax: Option<f64>,
    /// Multiple `m` of the resonance `π/dt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_kpi: Option<u32>,
    /// Absolute halfwidth, or a fraction of `k_max` when `halfwidth_kmax` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halfwidth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halfwidth_kmax: Option<f64>,
    /// Also track the mirrored band at `-center`.
    #[serde(default = "yes")]
    pub symmetric: bool,
}

fn yes() -> bool {
    true
}

impl BandSpec {
    pub fn kmax_fraction(label: &str, center: f64, halfwidth: f64) -> BandSpec {
        BandSpec {
            label: label.to_string(),
            center: None,
            center_kmax: Some(center),
            center_kpi: None,
            halfwidth: None,
            halfwidth_kmax: Some(halfwidth),
            symmetric: true,
        }
    }

    pub fn absolute(label: &str, center: f64, halfwidth: f64) -> BandSpec {
        BandSpec {
            label: label.to_string(),
            center: Some(center),
            center_kmax: None,
            center_kpi: None,
            halfwidth: Some(halfwidth),
            halfwidth_kmax: None,
            symmetric: true,
        }
    }

    /// Concrete band on `grid` for time step `dt`.
    pub fn resolve(&self, grid: &Grid, dt: f64) -> Result<Band> {
        let kmax = grid.k_max();
        let center = match (self.center, self.center_kmax, self.center_kpi) {
            (Some(c), None, None) => c,
            (None, Some(f), None) => f * kmax,
            (None, None, Some(m)) => m as f64 * PI / dt,
            _ => {
                return Err(Error::Config(format!(
                    "band `{}`: give exactly one of center, center_kmax, center_kpi",
                    self.label
                )))
            }
        };
        let halfwidth = match (self.halfwidth, self.halfwidth_kmax) {
            (Some(h), None) => h,
            (None, Some(f)) => f * kmax,
            _ => {
                return Err(Error::Config(format!(
                    "band `{}`: give exactly one of halfwidth, halfwidth_kmax",
                    self.label
                )))
            }
        };
        if !(halfwidth >= 0.0) {
            return Err(Error::Config(format!("band `{}`: negative halfwidth", self.label)));
        }
        if center.abs() > kmax {
            return Err(Error::Config(format!(
                "band `{}`: center {center} outside the spectral window ±{kmax}",
                self.label
            )));
        }
        let band = Band { label: self.label.clone(), k_center: center, k_halfwidth: halfwidth, symmetric: self.symmetric };
        if ladder_range(grid, center - halfwidth, center + halfwidth).is_none() {
            return Err(Error::EmptyBand { lo: center - halfwidth, hi: center + halfwidth });
        }
        Ok(band)
    }
}

/// A resolved band `[center − halfwidth, center + halfwidth]`, optionally mirrored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub label: String,
    pub k_center: f64,
    pub k_halfwidth: f64,
    pub symmetric: bool,
}

impl Band {
    /// Largest coefficient modulus of either component over the band(s).
    pub fn amplitude(&self, s: &SpectrumField) -> f64 {
        let mut best = 0.0f64;
        let mut visit = |c: f64| {
            if let Ok(a) = band_amplitude(s, c, self.k_halfwidth) {
                best = best.max(a[0]).max(a[1]);
            }
        };
        visit(self.k_center);
        if self.symmetric && self.k_center != 0.0 {
            visit(-self.k_center);
        }
        best
    }
}

/// Time series of one band's amplitude.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandTrack {
    pub label: String,
    pub k_center: f64,
    pub k_halfwidth: f64,
    pub times: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthModel {
    Exponential,
    Linear,
    Flat,
}

impl GrowthModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            GrowthModel::Exponential => "exponential",
            GrowthModel::Linear => "linear",
            GrowthModel::Flat => "flat",
        }
    }
}

/// Result of [`fit_growth_rate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    /// Slope of `ln(amplitude)` over the window.
    pub rate: f64,
    pub intercept: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
    /// R² of the log-linear fit over the window.
    pub r2: f64,
    /// R² of a straight-line fit of the raw amplitude over the whole track.
    pub r2_linear: f64,
    pub model: GrowthModel,
}

/// Thresholds of the growth classifier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub r2_threshold: f64,
    /// Minimum window length as a fraction of the track.
    pub min_fraction: f64,
    pub min_window: usize,
    pub min_track: usize,
    /// Growth over the window, in e-folds, needed for an exponential tag.
    pub min_efolds: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { r2_threshold: 0.98, min_fraction: 0.3, min_window: 10, min_track: 30, min_efolds: 1.0 }
    }
}

#[derive(Clone, Copy, Debug)]
struct LineFit {
    slope: f64,
    intercept: f64,
    r2: f64,
}

/// Running sums for O(1) least squares on any window.
struct Prefix {
    t: Vec<f64>,
    y: Vec<f64>,
    tt: Vec<f64>,
    ty: Vec<f64>,
    yy: Vec<f64>,
    t0: f64,
}

impl Prefix {
    fn new(t: &[f64], y: &[f64]) -> Prefix {
        // shift time for conditioning
        let t0 = t.first().copied().unwrap_or(0.0);
        let n = t.len();
        let mut p = Prefix {
            t: vec![0.0; n + 1],
            y: vec![0.0; n + 1],
            tt: vec![0.0; n + 1],
            ty: vec![0.0; n + 1],
            yy: vec![0.0; n + 1],
            t0,
        };
        for i in 0..n {
            let (a, b) = (t[i] - t0, y[i]);
            p.t[i + 1] = p.t[i] + a;
            p.y[i + 1] = p.y[i] + b;
            p.tt[i + 1] = p.tt[i] + a * a;
            p.ty[i + 1] = p.ty[i] + a * b;
            p.yy[i + 1] = p.yy[i] + b * b;
        }
        p
    }

    fn fit(&self, i: usize, j: usize) -> LineFit {
        let n = (j - i) as f64;
        let st = self.t[j] - self.t[i];
        let sy = self.y[j] - self.y[i];
        let stt = self.tt[j] - self.tt[i] - st * st / n;
        let sty = self.ty[j] - self.ty[i] - st * sy / n;
        let syy = self.yy[j] - self.yy[i] - sy * sy / n;
        let slope = if stt > 0.0 { sty / stt } else { 0.0 };
        let intercept = sy / n - slope * st / n - slope * self.t0;
        let r2 = if syy <= 0.0 || stt <= 0.0 {
            // constant data is fit perfectly by a flat line
            if syy <= 0.0 { 1.0 } else { 0.0 }
        } else {
            (sty * sty / (stt * syy)).clamp(0.0, 1.0)
        };
        LineFit { slope, intercept, r2 }
    }
}

/// Fits the growth rate of a band track and classifies the growth.
pub fn fit_growth_rate(track: &BandTrack) -> Result<GrowthFit> {
    fit_growth_rate_with(track, &FitConfig::default())
}

pub fn fit_growth_rate_with(track: &BandTrack, cfg: &FitConfig) -> Result<GrowthFit> {
    let n = track.times.len().min(track.amplitudes.len());
    if n < cfg.min_track {
        return Err(Error::TooFewSamples { need: cfg.min_track, got: n });
    }
    let t = &track.times[..n];
    let a = &track.amplitudes[..n];
    let flat = |r2_linear: f64| GrowthFit {
        rate: 0.0,
        intercept: f64::NEG_INFINITY,
        t_start: t[0],
        t_end: t[n - 1],
        samples: n,
        r2: 0.0,
        r2_linear,
        model: GrowthModel::Flat,
    };
    if a.iter().all(|&v| v <= 0.0) {
        return Ok(flat(0.0));
    }
    // zeros would break the log; clamp to the smallest positive sample
    let floor = a.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
    let ln: Vec<f64> = a.iter().map(|&v| v.max(floor).ln()).collect();
    let logs = Prefix::new(t, &ln);
    let raw = Prefix::new(t, a);

    let min_len = ((cfg.min_fraction * n as f64).ceil() as usize).max(cfg.min_window).min(n);
    let mut best: Option<(LineFit, usize, usize)> = None;
    for j in min_len..=n {
        for i in 0..=(j - min_len) {
            let f = logs.fit(i, j);
            if f.slope <= 0.0 {
                continue;
            }
            let better = match best {
                None => true,
                // iteration visits later windows last, so equality favors them
                Some((b, _, _)) => f.r2 >= b.r2 - 1e-12,
            };
            if better {
                best = Some((f, i, j));
            }
        }
    }
    let whole_log = logs.fit(0, n);
    let whole_lin = raw.fit(0, n);
    let r2_linear = if whole_lin.slope > 0.0 { whole_lin.r2 } else { 0.0 };

    let linear_wins = r2_linear >= cfg.r2_threshold && r2_linear >= whole_log.r2;
    let Some((fit, i, j)) = best else {
        let mut f = flat(r2_linear);
        if r2_linear >= cfg.r2_threshold {
            f.model = GrowthModel::Linear;
        }
        return Ok(f);
    };
    let (t_start, t_end) = (t[i], t[j - 1]);
    let efolds = fit.slope * (t_end - t_start);
    let model = if linear_wins {
        GrowthModel::Linear
    } else if fit.r2 >= cfg.r2_threshold && efolds >= cfg.min_efolds {
        GrowthModel::Exponential
    } else if r2_linear >= cfg.r2_threshold {
        GrowthModel::Linear
    } else {
        GrowthModel::Flat
    };
    Ok(GrowthFit {
        rate: fit.slope,
        intercept: fit.intercept,
        t_start,
        t_end,
        samples: j - i,
        r2: fit.r2,
        r2_linear,
        model,
    })
}

/// Zeroes all modes with `|k| < k_lo` and normalizes the remainder so that the
/// largest pointwise two-component ℓ² amplitude is 1.
pub fn extract_mode_shape(f: &SpinorField, k_lo: f64) -> Result<SpinorField> {
    let grid = f.grid;
    if !(k_lo > 0.0) || (grid.k_max() < k_lo) {
        return Err(Error::EmptyFilter { k_lo });
    }
    let tr = Transform::new(grid.len());
    let mut s = tr.dft(f);
    let before: f64 = s.s1.iter().chain(&s.s2).map(|z| z.norm_sqr()).sum();
    for i in 0..grid.len() {
        if grid.k(i).abs() < k_lo {
            s.s1[i] = 0.0.into();
            s.s2[i] = 0.0.into();
        }
    }
    let after: f64 = s.s1.iter().chain(&s.s2).map(|z| z.norm_sqr()).sum();
    // anything at round-off level relative to the input counts as removed
    if after == 0.0 || after <= 1e-24 * before {
        return Err(Error::EmptyFilter { k_lo });
    }
    let mut out = tr.idft(&s);
    let peak = (0..grid.len())
        .map(|j| (out.c1[j].norm_sqr() + out.c2[j].norm_sqr()).sqrt())
        .fold(0.0f64, f64::max);
    for z in out.c1.iter_mut().chain(out.c2.iter_mut()) {
        *z /= peak;
    }
    Ok(out)
}

/// Share of a field's power carried by the central `fraction` of the domain.
pub fn central_power_fraction(f: &SpinorField, fraction: f64) -> f64 {
    let half = 0.5 * fraction * f.grid.length();
    let mut inside = 0.0;
    let mut total = 0.0;
    for j in 0..f.grid.len() {
        let p = f.c1[j].norm_sqr() + f.c2[j].norm_sqr();
        total += p;
        if f.grid.x(j).abs() <= half {
            inside += p;
        }
    }
    if total > 0.0 { inside / total } else { 0.0 }
}

/// A local maximum of the spectrum standing out of the background.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralPeak {
    pub k: f64,
    pub amplitude: f64,
    /// Amplitude over the median background.
    pub contrast: f64,
}

/// Settings of [`find_spectral_peaks`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakConfig {
    /// Modes with `|k|` below this belong to the soliton and are ignored.
    pub exclude_below: f64,
    /// A mode is elevated if it exceeds `factor` times the median background.
    pub factor: f64,
    /// Elevated modes closer than this in `k` form one peak.
    pub merge_gap: f64,
}

impl Default for PeakConfig {
    fn default() -> Self {
        PeakConfig { exclude_below: 20.0, factor: 5.0, merge_gap: 1.0 }
    }
}

/// Clusters of elevated modes outside the soliton band, one peak per cluster.
pub fn find_spectral_peaks(s: &SpectrumField, cfg: &PeakConfig) -> Vec<SpectralPeak> {
    let grid = s.grid;
    let amp: Vec<f64> = (0..grid.len()).map(|i| s.s1[i].norm().max(s.s2[i].norm())).collect();
    let mut background: Vec<f64> = (0..grid.len())
        .filter(|&i| grid.k(i).abs() >= cfg.exclude_below)
        .map(|i| amp[i])
        .collect();
    if background.is_empty() {
        return Vec::new();
    }
    background.sort_by(|a, b| a.total_cmp(b));
    let median = background[background.len() / 2];
    let level = cfg.factor * median;

    let mut peaks: Vec<SpectralPeak> = Vec::new();
    let mut last_k = f64::NEG_INFINITY;
    for i in 0..grid.len() {
        let k = grid.k(i);
        if k.abs() < cfg.exclude_below || amp[i] <= level {
            continue;
        }
        let contrast = if median > 0.0 { amp[i] / median } else { f64::INFINITY };
        let joins = k - last_k <= cfg.merge_gap
            && peaks.last().is_some_and(|p| p.k.signum() == k.signum());
        if joins {
            let p = peaks.last_mut().expect("checked above");
            if amp[i] > p.amplitude {
                *p = SpectralPeak { k, amplitude: amp[i], contrast };
            }
        } else {
            peaks.push(SpectralPeak { k, amplitude: amp[i], contrast });
        }
        last_k = k;
    }
    peaks
}

/// Total width in `k` of modes with `|k| ≥ k_lo` whose amplitude reaches `threshold`.
pub fn spectral_support(s: &SpectrumField, threshold: f64, k_lo: f64) -> f64 {
    let grid = s.grid;
    let count = (0..grid.len())
        .filter(|&i| grid.k(i).abs() >= k_lo)
        .filter(|&i| s.s1[i].norm().max(s.s2[i].norm()) >= threshold)
        .count();
    count as f64 * grid.dk()
}

/// One row of a growth report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub model: String,
    pub scheme: String,
    pub parameter: f64,
    pub length: f64,
    pub points: usize,
    pub dt: f64,
    pub band: String,
    pub band_center: f64,
    pub fit: GrowthFit,
}

pub const GROWTH_CSV_HEADER: &str =
    "model,scheme,omega_or_q,L,L_over_pi,N,dt,band,band_center,rate,r2,model_tag,window_start,window_end";

pub fn growth_csv(rows: &[GrowthRow]) -> String {
    let mut out = String::from(GROWTH_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{:e},{},{},{},{}\n",
            r.model,
            r.scheme,
            r.parameter,
            r.length,
            r.length / PI,
            r.points,
            r.dt,
            r.band,
            r.band_center,
            r.fit.rate,
            r.fit.r2,
            r.fit.model.as_str(),
            r.fit.t_start,
            r.fit.t_end
        ));
    }
    out
}
