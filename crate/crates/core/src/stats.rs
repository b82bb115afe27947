//! Statistics that separate residential from commercial load curves.
//!
//! The usual pipeline: active power per waveform from the current matrix,
//! block-mean resampling, first difference normalized to zero mean and unit
//! standard deviation, then kurtosis, entropy and Laplace scale of that
//! derivative plus its 1-day-lag autocorrelation at several resolutions.
//! THD is computed per period directly on the current waveforms.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::factorize::CurrentMatrix;

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Uniformly sampled active power.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    start: f64,
    interval: f64,
    watts: Vec<f64>,
}

impl PowerSeries {
    /// `start` is the epoch time (seconds) of the first sample and
    /// `interval` the spacing in seconds.
    pub fn new(start: f64, interval: f64, watts: Vec<f64>) -> Result<Self> {
        if !(interval > 0.0) || !interval.is_finite() || !start.is_finite() {
            return Err(Error::InvalidInput(format!(
                "bad time base: start {start}, interval {interval}"
            )));
        }
        if let Some(row) = watts.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite { row, col: 1 });
        }
        Ok(Self {
            start,
            interval,
            watts,
        })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn interval(&self) -> f64 {
        self.interval
    }

    pub fn watts(&self) -> &[f64] {
        &self.watts
    }

    pub fn into_watts(self) -> Vec<f64> {
        self.watts
    }

    pub fn len(&self) -> usize {
        self.watts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.watts.is_empty()
    }

    pub fn timestamp(&self, i: usize) -> f64 {
        self.start + i as f64 * self.interval
    }

    pub fn span(&self) -> f64 {
        self.watts.len() as f64 * self.interval
    }
}

/// `p(t) = (1/N) sum_n v0(n) i(n,t)` for every period.
pub fn power_from_current(
    current: &CurrentMatrix,
    v0: &[f64],
    start: f64,
    interval: f64,
) -> Result<PowerSeries> {
    let n = current.samples_per_period();
    if v0.len() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("voltage of length {n}"),
            got: format!("{}", v0.len()),
        });
    }
    let watts = (0..current.num_periods())
        .map(|t| crate::linalg::dot(current.period(t), v0) / n as f64)
        .collect();
    PowerSeries::new(start, interval, watts)
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// First difference `p(t) - p(t-1)`, optionally normalized to zero mean and
/// unit (population) standard deviation.
pub fn derivative(p: &PowerSeries, normalize: bool) -> Result<PowerSeries> {
    if p.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: p.len() });
    }
    let mut d: Vec<f64> = p.watts.windows(2).map(|w| w[1] - w[0]).collect();
    if normalize {
        let mu = mean(&d);
        let var = d.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / d.len() as f64;
        if !(var > 0.0) {
            return Err(Error::ZeroVariance);
        }
        let sd = libm::sqrt(var);
        for v in &mut d {
            *v = (*v - mu) / sd;
        }
    }
    PowerSeries::new(p.start + p.interval, p.interval, d)
}

fn integer_ratio(requested: f64, base: f64) -> Result<usize> {
    let ratio = requested / base;
    let r = libm::round(ratio);
    if !(r >= 1.0) || (ratio - r).abs() > 1e-9 * ratio {
        return Err(Error::NotAMultiple { requested, base });
    }
    Ok(r as usize)
}

/// Block-mean aggregation to `new_interval` seconds. A trailing partial
/// block is dropped.
pub fn resample(p: &PowerSeries, new_interval: f64) -> Result<PowerSeries> {
    let factor = integer_ratio(new_interval, p.interval)?;
    if factor == 1 {
        return Ok(p.clone());
    }
    let watts = p
        .watts
        .chunks_exact(factor)
        .map(|c| c.iter().sum::<f64>() / factor as f64)
        .collect();
    PowerSeries::new(p.start, p.interval * factor as f64, watts)
}

/// Pearson correlation between `x(t)` and `x(t + lag)` over the overlap.
pub fn autocorrelation(p: &PowerSeries, lag_seconds: f64) -> Result<f64> {
    if lag_seconds == 0.0 {
        return Ok(1.0);
    }
    let lag = integer_ratio(lag_seconds, p.interval)?;
    let n = p.len();
    if lag + 2 > n {
        return Err(Error::TooShort { needed: lag + 2, got: n });
    }
    let a = &p.watts[..n - lag];
    let b = &p.watts[lag..];
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if !(saa > 0.0) || !(sbb > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok((sab / libm::sqrt(saa * sbb)).clamp(-1.0, 1.0))
}

/// `E[(x - mu)^4] / E[(x - mu)^2]^2` with population moments.
pub fn kurtosis(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: x.len() });
    }
    let mu = mean(x);
    let (mut m2, mut m4) = (0.0, 0.0);
    for &v in x {
        let d2 = (v - mu) * (v - mu);
        m2 += d2;
        m4 += d2 * d2;
    }
    let n = x.len() as f64;
    let (m2, m4) = (m2 / n, m4 / n);
    if !(m2 > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok(m4 / (m2 * m2))
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn sorted_copy(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    s
}

/// Histogram plug-in estimate of differential entropy, in nats.
///
/// The histogram covers `[q0.001, q0.999]` with Freedman-Diaconis bins;
/// samples outside that range are ignored. When the interquartile range is
/// zero the bin width falls back to `range / sqrt(n)`. A point mass gives
/// `-inf`.
pub fn entropy(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: x.len() });
    }
    let sorted = sorted_copy(x);
    let lo = quantile_sorted(&sorted, 0.001);
    let hi = quantile_sorted(&sorted, 0.999);
    let range = hi - lo;
    if !(range > 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let n = x.len() as f64;
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let mut width = 2.0 * iqr / libm::cbrt(n);
    if !(width > 0.0) {
        width = range / libm::sqrt(n);
    }
    let bins = (libm::ceil(range / width) as usize).clamp(1, 1 << 20);
    let width = range / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut inside = 0usize;
    for &v in &sorted {
        if v < lo || v > hi {
            continue;
        }
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
        inside += 1;
    }
    let m = inside as f64;
    Ok(counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / m;
            -p * libm::log(p / width)
        })
        .sum())
}

pub fn median(x: &[f64]) -> f64 {
    quantile_sorted(&sorted_copy(x), 0.5)
}

/// Maximum-likelihood Laplace scale `(1/N) sum |x_i - median|`.
pub fn laplace_scale(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let mu = median(x);
    Ok(x.iter().map(|v| (v - mu).abs()).sum::<f64>() / x.len() as f64)
}

/// Per-period total harmonic distortion, in percent.
///
/// Harmonic `h` is `h` cycles per period (the fundamental is one cycle per
/// period) and the ratio is harmonic energy over the energy of all non-DC
/// bins, from the one-sided DFT. `None` marks periods with no AC energy.
pub fn thd(current: &CurrentMatrix) -> Vec<Option<f64>> {
    let n = current.samples_per_period();
    let dft = HarmonicEnergy::new(n);
    (0..current.num_periods())
        .map(|t| dft.thd(current.period(t)))
        .collect()
}

/// Precomputed twiddles for one-sided DFT energies of length-`n` periods.
#[derive(Debug, Clone)]
pub struct HarmonicEnergy {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl HarmonicEnergy {
    pub fn new(n: usize) -> Self {
        let (cos, sin) = (0..n)
            .map(|j| {
                let a = core::f64::consts::TAU * j as f64 / n as f64;
                (libm::cos(a), libm::sin(a))
            })
            .unzip();
        Self { cos, sin }
    }

    /// Energy of harmonics `1..=n/2`, with mirrored bins folded in so the
    /// total matches Parseval.
    pub fn energies(&self, x: &[f64]) -> Vec<f64> {
        let n = self.cos.len();
        (1..=n / 2)
            .map(|h| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, &v) in x.iter().enumerate() {
                    let j = (h * i) % n;
                    re += v * self.cos[j];
                    im -= v * self.sin[j];
                }
                let mirrored = if 2 * h == n { 1.0 } else { 2.0 };
                mirrored * (re * re + im * im)
            })
            .collect()
    }

    pub fn thd(&self, x: &[f64]) -> Option<f64> {
        let e = self.energies(x);
        let total: f64 = e.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        let harmonics: f64 = e.iter().skip(1).sum();
        Some(100.0 * libm::sqrt(harmonics / total))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcfRow {
    pub interval: f64,
    /// `None` when the resampled derivative is too short or constant.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThdSummary {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub defined_periods: usize,
    pub total_periods: usize,
}

impl ThdSummary {
    pub fn from_periods(values: &[Option<f64>]) -> Option<Self> {
        let defined: Vec<f64> = values.iter().flatten().copied().collect();
        if defined.is_empty() {
            return None;
        }
        Some(Self {
            mean: mean(&defined),
            median: median(&defined),
            min: defined.iter().copied().fold(f64::INFINITY, f64::min),
            max: defined.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            defined_periods: defined.len(),
            total_periods: values.len(),
        })
    }
}

/// Distribution statistics of the normalized power derivative at
/// `base_interval`, plus 1-day-lag derivative autocorrelations.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub base_interval: f64,
    pub kurtosis: f64,
    pub entropy: f64,
    pub laplace_scale: f64,
    pub acf_1day: Vec<AcfRow>,
    pub thd: Option<ThdSummary>,
}

/// Computes a [`MetricReport`]. The first entry of `intervals` is the
/// resolution of the distribution statistics; the 1-day autocorrelation is
/// reported at every entry.
pub fn analyze_power(p: &PowerSeries, intervals: &[f64]) -> Result<MetricReport> {
    let base_interval = *intervals
        .first()
        .ok_or_else(|| Error::InvalidInput("at least one resampling interval is required".into()))?;
    let base = resample(p, base_interval)?;
    let d = derivative(&base, true)?;
    let acf_1day = intervals
        .iter()
        .map(|&interval| {
            let value = resample(p, interval)
                .and_then(|r| derivative(&r, false))
                .and_then(|d| autocorrelation(&d, SECONDS_PER_DAY))
                .ok();
            Ok(AcfRow { interval, value })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport {
        base_interval,
        kurtosis: kurtosis(d.watts())?,
        entropy: entropy(d.watts())?,
        laplace_scale: laplace_scale(d.watts())?,
        acf_1day,
        thd: None,
    })
}

/// [`analyze_power`] on the power of `current`, plus a THD summary.
pub fn analyze_current(
    current: &CurrentMatrix,
    v0: &[f64],
    start: f64,
    cadence: f64,
    intervals: &[f64],
) -> Result<(MetricReport, Vec<Option<f64>>)> {
    let p = power_from_current(current, v0, start, cadence)?;
    let mut report = analyze_power(&p, intervals)?;
    let per_period = thd(current);
    report.thd = ThdSummary::from_periods(&per_period);
    Ok((report, per_period))
}
