//! Thermal variability metrics and the respiratory spectral quality index.
//!
//! Four base metrics capture directionality and variability of a thermal
//! signal:
//!
//! * `TD`  — temperature difference between the last and first sample;
//! * `STV` — least-squares slope of the signal against time in seconds;
//! * `SDSTV` — standard deviation of the successive differences;
//! * `SDTV`  — standard deviation of the signal itself.
//!
//! Each is evaluated on four source variants (original / normalized, each
//! nonfiltered / low-pass filtered), giving the sixteen-value [`MetricSet`].
//! `psqi` measures the fraction of spectral power inside the expected
//! respiratory band.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{self, ThermalSignal, ValueRange, DEFAULT_CUTOFF_HZ};

/// Least-squares line fit of samples against time in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    /// degC per second (1/second on normalized input); this is STV.
    pub slope: f64,
    /// degC at t = 0.
    pub intercept: f64,
    /// Root mean square of the fit residuals.
    pub residual_rms: f64,
}

/// Temperature difference between the literal endpoints, `x(n-1) - x(0)`.
pub fn td(sig: &ThermalSignal) -> Result<f64> {
    let x = sig.samples();
    if x.len() < 2 {
        return Err(Error::TooShort {
            got: x.len(),
            need: 2,
        });
    }
    Ok(x[x.len() - 1] - x[0])
}

/// Ordinary least-squares fit against time; the slope is STV.
///
/// Regressing against seconds (not sample index) keeps slopes comparable
/// across sample rates.
pub fn stv(sig: &ThermalSignal) -> Result<LinearFit> {
    let x = sig.samples();
    let n = x.len();
    if n < 2 {
        return Err(Error::TooShort { got: n, need: 2 });
    }
    let nf = n as f64;
    let t_mean = (nf - 1.0) / 2.0 / sig.sample_rate();
    let x_mean = x.iter().sum::<f64>() / nf;
    let mut s_tt = 0.0;
    let mut s_tx = 0.0;
    for (k, &v) in x.iter().enumerate() {
        let dt = sig.time_at(k) - t_mean;
        s_tt += dt * dt;
        s_tx += dt * (v - x_mean);
    }
    let slope = s_tx / s_tt;
    let intercept = x_mean - slope * t_mean;
    let mut ss_res = 0.0;
    for (k, &v) in x.iter().enumerate() {
        let r = v - (intercept + slope * sig.time_at(k));
        ss_res += r * r;
    }
    Ok(LinearFit {
        slope,
        intercept,
        residual_rms: (ss_res / nf).sqrt(),
    })
}

/// Standard deviation of the successive differences `x(k+1) - x(k)`.
///
/// The n-1 differences are treated as the sample, so the divisor is n-2.
pub fn sdstv(sig: &ThermalSignal) -> Result<f64> {
    let x = sig.samples();
    if x.len() < 3 {
        return Err(Error::TooShort {
            got: x.len(),
            need: 3,
        });
    }
    let diffs: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(sample_sd(&diffs))
}

/// Sample standard deviation of the signal (divisor n-1).
pub fn sdtv(sig: &ThermalSignal) -> Result<f64> {
    let x = sig.samples();
    if x.len() < 2 {
        return Err(Error::TooShort {
            got: x.len(),
            need: 2,
        });
    }
    Ok(sample_sd(x))
}

fn sample_sd(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// The sixteen values of the metric grid. Suffix `_n` marks a normalized
/// source, `_L` a low-pass filtered source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct MetricSet {
    pub TD: f64,
    pub STV: f64,
    pub SDSTV: f64,
    pub SDTV: f64,
    pub TD_n: f64,
    pub STV_n: f64,
    pub SDSTV_n: f64,
    pub SDTV_n: f64,
    pub TD_L: f64,
    pub STV_L: f64,
    pub SDSTV_L: f64,
    pub SDTV_L: f64,
    pub TD_Ln: f64,
    pub STV_Ln: f64,
    pub SDSTV_Ln: f64,
    pub SDTV_Ln: f64,
}

impl MetricSet {
    pub const NAMES: [&'static str; 16] = [
        "TD", "STV", "SDSTV", "SDTV", "TD_n", "STV_n", "SDSTV_n", "SDTV_n", "TD_L", "STV_L",
        "SDSTV_L", "SDTV_L", "TD_Ln", "STV_Ln", "SDSTV_Ln", "SDTV_Ln",
    ];

    /// Values in the order of [`MetricSet::NAMES`].
    pub fn values(&self) -> [f64; 16] {
        [
            self.TD, self.STV, self.SDSTV, self.SDTV, self.TD_n, self.STV_n, self.SDSTV_n,
            self.SDTV_n, self.TD_L, self.STV_L, self.SDSTV_L, self.SDTV_L, self.TD_Ln,
            self.STV_Ln, self.SDSTV_Ln, self.SDTV_Ln,
        ]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Self::NAMES
            .iter()
            .position(|&n| n == name)
            .map(|i| self.values()[i])
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in Self::NAMES.iter().zip(self.values()) {
            if !v.is_finite() {
                return Err(Error::InvalidSignal(format!("metric {name} is {v}")));
            }
        }
        for (name, v) in [
            ("SDSTV", self.SDSTV),
            ("SDTV", self.SDTV),
            ("SDSTV_n", self.SDSTV_n),
            ("SDTV_n", self.SDTV_n),
            ("SDSTV_L", self.SDSTV_L),
            ("SDTV_L", self.SDTV_L),
            ("SDSTV_Ln", self.SDSTV_Ln),
            ("SDTV_Ln", self.SDTV_Ln),
        ] {
            if v < 0.0 {
                return Err(Error::InvalidSignal(format!("metric {name} is negative")));
            }
        }
        Ok(())
    }
}

/// Units block attached to serialized metric sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricUnits {
    pub original: String,
    pub normalized: String,
}

impl Default for MetricUnits {
    fn default() -> Self {
        Self {
            original: "degC".into(),
            normalized: "unitless".into(),
        }
    }
}

/// On-disk form of a metric set: the sixteen named values plus a units block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSetFile {
    #[serde(flatten)]
    pub metrics: MetricSet,
    pub units: MetricUnits,
}

/// Per-person normalization context: shared value ranges for raw and
/// filtered sources, plus the cut-off they were derived with.
///
/// Holding a separate range for the filtered sources keeps every normalized
/// sample inside [0, 1] even though filtering reshapes amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersonContext {
    pub cutoff_hz: f64,
    pub raw: ValueRange,
    pub filtered: ValueRange,
}

impl PersonContext {
    /// Builds the context from all of one person's outlier-rejected,
    /// nonfiltered session signals.
    pub fn from_signals(sigs: &[&ThermalSignal], cutoff_hz: f64) -> Result<Self> {
        if sigs.is_empty() {
            return Err(Error::TooShort { got: 0, need: 1 });
        }
        let raw = pipeline::compute_range(sigs)?;
        let filtered_sigs = sigs
            .iter()
            .map(|s| pipeline::lowpass(s, cutoff_hz))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&ThermalSignal> = filtered_sigs.iter().collect();
        let filtered = pipeline::compute_range(&refs)?;
        Ok(Self {
            cutoff_hz,
            raw,
            filtered,
        })
    }

    /// Context for a single signal considered on its own.
    pub fn from_signal(sig: &ThermalSignal) -> Result<Self> {
        Self::from_signals(&[sig], DEFAULT_CUTOFF_HZ)
    }
}

/// Evaluates the full sixteen-metric grid for one outlier-rejected,
/// nonfiltered signal.
///
/// The three sibling sources are derived internally: low-pass filtered,
/// normalized, and filtered-then-normalized (filtering first, so transients
/// are scaled consistently across a person's sessions). Every cell equals
/// the corresponding base operation applied to that derived source.
pub fn metric_set(nonfiltered: &ThermalSignal, ctx: &PersonContext) -> Result<MetricSet> {
    if nonfiltered.is_filtered() || nonfiltered.is_normalized() {
        return Err(Error::InvalidSignal(
            "metric_set expects a nonfiltered, non-normalized source".into(),
        ));
    }
    let filtered = pipeline::lowpass(nonfiltered, ctx.cutoff_hz)?;
    let normalized = pipeline::apply_range(nonfiltered, ctx.raw)?;
    let filtered_norm = pipeline::apply_range(&filtered, ctx.filtered)?;

    let base = |sig: &ThermalSignal| -> Result<(f64, f64, f64, f64)> {
        Ok((
            td(sig)?,
            stv(sig)?.slope,
            sdstv(sig)?,
            sdtv(sig)?,
        ))
    };
    let (td0, stv0, sdstv0, sdtv0) = base(nonfiltered)?;
    let (td_n, stv_n, sdstv_n, sdtv_n) = base(&normalized)?;
    let (td_l, stv_l, sdstv_l, sdtv_l) = base(&filtered)?;
    let (td_ln, stv_ln, sdstv_ln, sdtv_ln) = base(&filtered_norm)?;

    let set = MetricSet {
        TD: td0,
        STV: stv0,
        SDSTV: sdstv0,
        SDTV: sdtv0,
        TD_n: td_n,
        STV_n: stv_n,
        SDSTV_n: sdstv_n,
        SDTV_n: sdtv_n,
        TD_L: td_l,
        STV_L: stv_l,
        SDSTV_L: sdstv_l,
        SDTV_L: sdtv_l,
        TD_Ln: td_ln,
        STV_Ln: stv_ln,
        SDSTV_Ln: sdstv_ln,
        SDTV_Ln: sdtv_ln,
    };
    set.validate()?;
    Ok(set)
}

/// One-sided power spectral density estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    frequencies: Vec<f64>,
    power: Vec<f64>,
}

impl PowerSpectrum {
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    /// Frequency spacing between bins, in Hz.
    pub fn bin_width(&self) -> f64 {
        self.frequencies.get(1).copied().unwrap_or(0.0)
    }
}

/// Mean-removed, Hann-windowed single-segment periodogram, one-sided, with
/// bin width `sample_rate / n`.
///
/// The density is scaled so that `sum(power) * bin_width` equals the mean
/// square of the windowed signal compensated by the window power.
pub fn psd(sig: &ThermalSignal) -> Result<PowerSpectrum> {
    let n = sig.len();
    if n < 16 {
        return Err(Error::TooShort { got: n, need: 16 });
    }
    let fs = sig.sample_rate();
    let x = sig.samples();
    let mean = x.iter().sum::<f64>() / n as f64;

    let mut window_power = 0.0;
    let mut buf: Vec<rustfft::num_complex::Complex<f64>> = (0..n)
        .map(|j| {
            let w = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * j as f64 / n as f64).cos());
            window_power += w * w;
            rustfft::num_complex::Complex::new(w * (x[j] - mean), 0.0)
        })
        .collect();
    rustfft::FftPlanner::new()
        .plan_fft_forward(n)
        .process(&mut buf);

    let half = n / 2;
    let scale = 1.0 / (fs * window_power);
    let mut frequencies = Vec::with_capacity(half + 1);
    let mut power = Vec::with_capacity(half + 1);
    for k in 0..=half {
        let mag2 = buf[k].norm_sqr();
        let one_sided = if k == 0 || (n % 2 == 0 && k == half) {
            1.0
        } else {
            2.0
        };
        frequencies.push(k as f64 * fs / n as f64);
        power.push(one_sided * scale * mag2);
    }
    Ok(PowerSpectrum { frequencies, power })
}

/// Expected respiratory band for the quality index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqiBand {
    pub f_min: f64,
    pub f_max: f64,
}

impl Default for SqiBand {
    fn default() -> Self {
        Self {
            f_min: 0.1,
            f_max: 0.85,
        }
    }
}

impl SqiBand {
    pub fn validate(&self, nyquist: f64) -> Result<()> {
        if !(self.f_min > 0.0 && self.f_min < self.f_max) {
            return Err(Error::InvalidSpec(format!(
                "band [{}, {}] must satisfy 0 < f_min < f_max",
                self.f_min, self.f_max
            )));
        }
        if self.f_max > nyquist {
            return Err(Error::RateTooLow {
                rate: 2.0 * nyquist,
                need: 2.0 * self.f_max,
            });
        }
        Ok(())
    }
}

/// Relative power quality index: the fraction of spectral power inside the
/// band. The DC bin is excluded from both integrals (a 30 degC baseline would
/// otherwise swamp the ratio); the total runs over the rest of the one-sided
/// spectrum up to Nyquist. A signal with no non-DC power scores 0.
pub fn psqi(sig: &ThermalSignal, band: &SqiBand) -> Result<f64> {
    band.validate(sig.sample_rate() / 2.0)?;
    let spectrum = psd(sig)?;
    let mut in_band = 0.0;
    let mut total = 0.0;
    for (k, (&f, &p)) in spectrum
        .frequencies()
        .iter()
        .zip(spectrum.power())
        .enumerate()
    {
        if k == 0 {
            continue;
        }
        total += p;
        if f >= band.f_min && f <= band.f_max {
            in_band += p;
        }
    }
    if total <= 0.0 {
        return Ok(0.0);
    }
    Ok((in_band / total).clamp(0.0, 1.0))
}
