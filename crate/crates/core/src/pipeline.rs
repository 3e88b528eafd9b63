//! Signal extraction and conditioning.
//!
//! Converts a tracked sequence into clean 1-D thermal signals. The stage
//! order is fixed: spatial averaging, sliding-window Tukey outlier
//! rejection, then optionally low-pass filtering and per-person min-max
//! normalization. Metrics never see a series that skipped outlier rejection.
//!
//! All operations are pure functions over immutable inputs and safe to run
//! on different signals in parallel.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{FrameSequence, ThermalFrame};
use crate::tracker::{Roi, RoiTrajectory};

/// Uniformly sampled 1-D temperature series.
///
/// Values are degC, or unitless in `[0, 1]` once `normalized` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalSignal {
    samples: Vec<f64>,
    sample_rate: f64,
    filtered: bool,
    normalized: bool,
}

impl ThermalSignal {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        Self::with_flags(samples, sample_rate, false, false)
    }

    pub fn with_flags(
        samples: Vec<f64>,
        sample_rate: f64,
        filtered: bool,
        normalized: bool,
    ) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidSignal(format!(
                "sample_rate must be positive, got {sample_rate}"
            )));
        }
        for (k, &x) in samples.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::InvalidSignal(format!(
                    "non-finite sample {x} at index {k}"
                )));
            }
            if normalized && !(0.0..=1.0).contains(&x) {
                return Err(Error::InvalidSignal(format!(
                    "normalized sample {x} at index {k} outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            samples,
            sample_rate,
            filtered,
            normalized,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn is_filtered(&self) -> bool {
        self.filtered
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Time of sample `k` in seconds.
    pub fn time_at(&self, k: usize) -> f64 {
        k as f64 / self.sample_rate
    }

    /// Span between first and last sample, in seconds.
    pub fn duration(&self) -> f64 {
        if self.samples.len() < 2 {
            0.0
        } else {
            (self.samples.len() - 1) as f64 / self.sample_rate
        }
    }
}

/// Tukey-fence rejection parameters.
///
/// The fence is `[Q1 - g*IQR, Q3 + g*IQR]` computed per sliding window; the
/// window covers `window_fraction` of the signal but never represents less
/// than `min_window_seconds` of data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierConfig {
    pub g: f64,
    pub window_fraction: f64,
    pub min_window_seconds: f64,
}

impl Default for OutlierConfig {
    fn default() -> Self {
        Self {
            g: 1.5,
            window_fraction: 1.0 / 3.0,
            min_window_seconds: 30.0,
        }
    }
}

impl OutlierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0) {
            return Err(Error::InvalidSpec(format!("g must be > 0, got {}", self.g)));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(Error::InvalidSpec(format!(
                "window_fraction must be in (0, 1], got {}",
                self.window_fraction
            )));
        }
        if !(self.min_window_seconds > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "min_window_seconds must be > 0, got {}",
                self.min_window_seconds
            )));
        }
        Ok(())
    }

    /// Window length in samples for a signal of `n` samples at `sample_rate`:
    /// `max(window_fraction * n, min_window_seconds * sample_rate)`, clamped
    /// to the signal length.
    pub fn window_len(&self, n: usize, sample_rate: f64) -> usize {
        let by_fraction = (self.window_fraction * n as f64).round() as usize;
        let by_seconds = (self.min_window_seconds * sample_rate).round() as usize;
        by_fraction.max(by_seconds).clamp(4.min(n), n)
    }
}

/// Arithmetic mean over the pixels whose centers fall inside the ROI
/// rectangle (clamped to the frame).
pub fn spatial_average(frame: &ThermalFrame, roi: &Roi) -> Result<f64> {
    let rect = roi.pixel_rect(frame.width(), frame.height())?;
    let mut sum = 0.0f64;
    for y in rect.y0..rect.y0 + rect.height {
        for x in rect.x0..rect.x0 + rect.width {
            sum += frame.at(x, y) as f64;
        }
    }
    Ok(sum / (rect.width * rect.height) as f64)
}

/// Spatially averages each frame under its tracked ROI.
///
/// Samples of low-confidence frames are included here; deviations they cause
/// are the outlier stage's job.
pub fn extract_signal(seq: &FrameSequence, traj: &RoiTrajectory) -> Result<ThermalSignal> {
    if traj.len() != seq.len() {
        return Err(Error::LengthMismatch {
            left: seq.len(),
            right: traj.len(),
        });
    }
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut samples = Vec::with_capacity(seq.len());
    for (frame, roi) in seq.frames().iter().zip(&traj.rois) {
        samples.push(spatial_average(frame, roi)?);
    }
    ThermalSignal::new(samples, seq.nominal_rate() as f64)
}

/// Marks samples outside their window's Tukey fence. Exposed so tests and
/// the CLI can inspect which indices the rejection stage would remove.
pub fn flag_outliers(sig: &ThermalSignal, cfg: &OutlierConfig) -> Result<Vec<bool>> {
    cfg.validate()?;
    let n = sig.len();
    if n < 4 {
        return Err(Error::TooShort { got: n, need: 4 });
    }
    let len = cfg.window_len(n, sig.sample_rate());
    let x = sig.samples();
    let mut flags = vec![false; n];
    // full-length window centered on k, shifted to stay inside the signal;
    // its start advances by at most one per sample, so the sorted window is
    // maintained incrementally instead of re-sorting
    let mut start = 0usize;
    let mut window: Vec<f64> = x[..len].to_vec();
    window.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    for k in 0..n {
        let target = k.saturating_sub(len / 2).min(n - len);
        while start < target {
            let out = window.partition_point(|&u| u < x[start]);
            debug_assert!(window[out] == x[start]);
            window.remove(out);
            let incoming = x[start + len];
            let at = window.partition_point(|&u| u < incoming);
            window.insert(at, incoming);
            start += 1;
        }
        let q1 = quantile_sorted(&window, 0.25);
        let q3 = quantile_sorted(&window, 0.75);
        let iqr = q3 - q1;
        let lo = q1 - cfg.g * iqr;
        let hi = q3 + cfg.g * iqr;
        flags[k] = x[k] < lo || x[k] > hi;
    }
    Ok(flags)
}

/// Removes Tukey-fence outliers and fills the gaps by linear interpolation
/// between surviving neighbors (edge gaps take the nearest survivor), so the
/// output stays uniformly sampled.
pub fn reject_outliers(sig: &ThermalSignal, cfg: &OutlierConfig) -> Result<ThermalSignal> {
    let flags = flag_outliers(sig, cfg)?;
    if flags.iter().all(|&f| f) {
        return Err(Error::AllOutliers);
    }
    let x = sig.samples();
    let n = x.len();
    let survivors: Vec<usize> = (0..n).filter(|&k| !flags[k]).collect();
    let mut out = x.to_vec();
    let first = survivors[0];
    let last = *survivors.last().unwrap();
    for k in 0..n {
        if !flags[k] {
            continue;
        }
        if k < first {
            out[k] = x[first];
        } else if k > last {
            out[k] = x[last];
        } else {
            let right_pos = survivors.partition_point(|&s| s < k);
            let right = survivors[right_pos];
            let left = survivors[right_pos - 1];
            let t = (k - left) as f64 / (right - left) as f64;
            out[k] = x[left] + t * (x[right] - x[left]);
        }
    }
    ThermalSignal::with_flags(out, sig.sample_rate(), sig.is_filtered(), sig.is_normalized())
}

/// Linear-interpolation quantile (type 7) over a sorted slice.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Default low-pass cut-off in Hz, below the respiratory band.
pub const DEFAULT_CUTOFF_HZ: f64 = 0.08;

/// Zero-phase low-pass: a 2nd-order Butterworth biquad run forward then
/// backward (effective 4th order, no phase shift). Endpoints are handled by
/// odd reflection over one settling length plus steady-state initial filter
/// conditions, so a constant passes through exactly.
pub fn lowpass(sig: &ThermalSignal, cutoff: f64) -> Result<ThermalSignal> {
    let fs = sig.sample_rate();
    if !(cutoff > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "cutoff must be > 0, got {cutoff}"
        )));
    }
    if fs <= 2.0 * cutoff {
        return Err(Error::RateTooLow {
            rate: fs,
            need: 2.0 * cutoff,
        });
    }
    let n = sig.len();
    if n < 2 {
        return Err(Error::TooShort { got: n, need: 2 });
    }

    let coef = BiquadLowpass::design(cutoff, fs);
    let x = sig.samples();
    let pad = ((fs / cutoff).ceil() as usize).min(n - 1).max(1);

    // odd reflection about both endpoints
    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in 1..=pad {
        ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }

    let mut fwd = coef.filter(&ext);
    fwd.reverse();
    let mut bwd = coef.filter(&fwd);
    bwd.reverse();

    let samples = bwd[pad..pad + n].to_vec();
    // a filtered series is no longer guaranteed to sit in [0, 1]
    ThermalSignal::with_flags(samples, fs, true, false)
}

/// Discretized 2nd-order Butterworth low-pass section (bilinear transform),
/// direct form II transposed.
#[derive(Debug, Clone, Copy)]
struct BiquadLowpass {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl BiquadLowpass {
    fn design(cutoff: f64, fs: f64) -> Self {
        let c = 1.0 / (std::f64::consts::PI * cutoff / fs).tan();
        let sqrt2 = std::f64::consts::SQRT_2;
        let b0 = 1.0 / (1.0 + sqrt2 * c + c * c);
        Self {
            b0,
            b1: 2.0 * b0,
            b2: b0,
            a1: 2.0 * (1.0 - c * c) * b0,
            a2: (1.0 - sqrt2 * c + c * c) * b0,
        }
    }

    fn filter(&self, x: &[f64]) -> Vec<f64> {
        // steady-state initial conditions for a step of x[0]: removes the
        // start-up transient entirely for constant inputs
        let x0 = x[0];
        let mut z1 = (1.0 - self.b0) * x0;
        let mut z2 = (self.b2 - self.a2) * x0;
        let mut y = Vec::with_capacity(x.len());
        for &v in x {
            let out = self.b0 * v + z1;
            z1 = self.b1 * v - self.a1 * out + z2;
            z2 = self.b2 * v - self.a2 * out;
            y.push(out);
        }
        y
    }
}

/// Inclusive value range used for min-max scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueRange {
    pub min: f64,
    pub max: f64,
}

impl ValueRange {
    pub fn span(&self) -> f64 {
        self.max - self.min
    }
}

/// Global min and max over a set of signals belonging to one person.
pub fn compute_range(sigs: &[&ThermalSignal]) -> Result<ValueRange> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut count = 0usize;
    for sig in sigs {
        for &x in sig.samples() {
            min = min.min(x);
            max = max.max(x);
        }
        count += sig.len();
    }
    if count < 2 {
        return Err(Error::TooShort { got: count, need: 2 });
    }
    if !(max > min) {
        return Err(Error::ConstantSignal);
    }
    Ok(ValueRange { min, max })
}

/// Maps every sample through `(x - min) / (max - min)`.
pub fn apply_range(sig: &ThermalSignal, range: ValueRange) -> Result<ThermalSignal> {
    if !(range.span() > 0.0) {
        return Err(Error::ConstantSignal);
    }
    let samples = sig
        .samples()
        .iter()
        .map(|&x| ((x - range.min) / range.span()).clamp(0.0, 1.0))
        .collect();
    ThermalSignal::with_flags(samples, sig.sample_rate(), sig.is_filtered(), true)
}

/// Min-max scales all of one person's signals against their shared range, so
/// between-session amplitude differences survive.
pub fn normalize(sigs: &[&ThermalSignal]) -> Result<Vec<ThermalSignal>> {
    let range = compute_range(sigs)?;
    sigs.iter().map(|s| apply_range(s, range)).collect()
}

/// Linear interpolation onto `target_n` uniformly spaced points spanning the
/// original first-to-last-sample interval; the sample rate rescales so the
/// duration is preserved.
pub fn resample(sig: &ThermalSignal, target_n: usize) -> Result<ThermalSignal> {
    let n = sig.len();
    if n < 2 {
        return Err(Error::TooShort { got: n, need: 2 });
    }
    if target_n < 2 {
        return Err(Error::TooShort {
            got: target_n,
            need: 2,
        });
    }
    let x = sig.samples();
    let span = (n - 1) as f64 / sig.sample_rate();
    let new_rate = (target_n - 1) as f64 / span;
    let mut out = Vec::with_capacity(target_n);
    for i in 0..target_n {
        let u = i as f64 * (n - 1) as f64 / (target_n - 1) as f64;
        let j = (u.floor() as usize).min(n - 2);
        let frac = u - j as f64;
        out.push(x[j] + frac * (x[j + 1] - x[j]));
    }
    ThermalSignal::with_flags(out, new_rate, sig.is_filtered(), sig.is_normalized())
}

/// Provenance sidecar stored next to a signal CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalSidecar {
    pub filtered: bool,
    pub normalized: bool,
    pub sample_rate: f64,
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

/// Writes a signal as CSV (`k,t_seconds,value`) plus a `.meta.json` sidecar
/// carrying the provenance flags and sample rate.
pub fn write_signal_csv(sig: &ThermalSignal, path: &Path) -> Result<()> {
    let mut out = String::from("k,t_seconds,value\n");
    for (k, &v) in sig.samples().iter().enumerate() {
        out.push_str(&format!("{k},{},{v}\n", sig.time_at(k)));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))?;
    let sidecar = SignalSidecar {
        filtered: sig.is_filtered(),
        normalized: sig.is_normalized(),
        sample_rate: sig.sample_rate(),
    };
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    let sp = sidecar_path(path);
    std::fs::write(&sp, json).map_err(|e| Error::io(&sp, e))
}

/// Reads a signal CSV written by [`write_signal_csv`]. A missing sidecar
/// falls back to raw provenance with the rate derived from the time column.
pub fn read_signal_csv(path: &Path) -> Result<ThermalSignal> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "k,t_seconds,value" => {}
        _ => {
            return Err(Error::BadCsv {
                path: path.to_path_buf(),
                reason: "expected header `k,t_seconds,value`".into(),
            })
        }
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 3 {
            return Err(Error::BadCsv {
                path: path.to_path_buf(),
                reason: format!("line {}: expected 3 columns", lineno + 2),
            });
        }
        let t: f64 = cells[1].trim().parse().map_err(|_| Error::BadCsv {
            path: path.to_path_buf(),
            reason: format!("line {}: bad t_seconds", lineno + 2),
        })?;
        let v: f64 = cells[2].trim().parse().map_err(|_| Error::BadCsv {
            path: path.to_path_buf(),
            reason: format!("line {}: bad value", lineno + 2),
        })?;
        times.push(t);
        values.push(v);
    }
    let sp = sidecar_path(path);
    if sp.exists() {
        let text = std::fs::read_to_string(&sp).map_err(|e| Error::io(&sp, e))?;
        let sidecar: SignalSidecar = serde_json::from_str(&text).map_err(|e| Error::BadCsv {
            path: sp.clone(),
            reason: e.to_string(),
        })?;
        ThermalSignal::with_flags(
            values,
            sidecar.sample_rate,
            sidecar.filtered,
            sidecar.normalized,
        )
    } else {
        if values.len() < 2 {
            return Err(Error::TooShort {
                got: values.len(),
                need: 2,
            });
        }
        let span = times.last().unwrap() - times[0];
        if !(span > 0.0) {
            return Err(Error::BadCsv {
                path: path.to_path_buf(),
                reason: "time column does not increase".into(),
            });
        }
        let rate = (values.len() - 1) as f64 / span;
        ThermalSignal::new(values, rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_sequence, gen_signal, PathSpec, SceneSpec, SignalSpec};
    use crate::tracker::{select_large_roi, track, TrackerConfig, LARGE_ROI_SCALE_X, LARGE_ROI_SCALE_Y};

    fn signal(samples: Vec<f64>, rate: f64) -> ThermalSignal {
        ThermalSignal::new(samples, rate).unwrap()
    }

    #[test]
    fn spatial_average_of_constant_frame() {
        let frame = ThermalFrame::new(16, 12, 0.0, vec![31.2; 192]).unwrap();
        let roi = Roi::new(8.0, 6.0, 5, 5).unwrap();
        let mean = spatial_average(&frame, &roi).unwrap();
        assert!((mean - 31.2).abs() < 1e-5);
    }

    #[test]
    fn spatial_average_of_two_by_two() {
        // 2x2 ROI over values {30, 30, 31, 33}
        let frame = ThermalFrame::new(2, 2, 0.0, vec![30.0, 30.0, 31.0, 33.0]).unwrap();
        let roi = Roi::new(0.5, 0.5, 3, 3).unwrap();
        assert_eq!(spatial_average(&frame, &roi).unwrap(), 31.0);
    }

    #[test]
    fn spatial_average_centered_on_blob_beats_offset() {
        let spec = SceneSpec {
            width: 80,
            height: 60,
            duration: 1.0,
            rate: 1.0,
            background: 28.0,
            blob_peak: 34.0,
            blob_sigma: 5.0,
            path: PathSpec::Static { x: 40.0, y: 30.0 },
            pixel_noise_sd: 0.0,
            peak_drift: 0.0,
            peak_breathing_amp: 0.0,
            peak_breathing_freq: 0.25,
            seed: 7,
        };
        let scene = gen_sequence(&spec).unwrap();
        let frame = &scene.sequence.frames()[0];
        let centered = Roi::new(40.0, 30.0, 9, 9).unwrap();
        let offset = Roi::new(50.0, 30.0, 9, 9).unwrap();
        let c = spatial_average(frame, &centered).unwrap();
        let o = spatial_average(frame, &offset).unwrap();
        assert!(c > o, "centered {c} <= offset {o}");
        // and both agree with the generator's analytic ROI mean
        assert!((c - scene.truth.roi_mean(0, &centered).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn extract_constant_sequence() {
        let frames: Vec<ThermalFrame> = (0..3)
            .map(|i| ThermalFrame::new(8, 8, i as f64, vec![30.5; 64]).unwrap())
            .collect();
        let seq = FrameSequence::new(frames, 1.0).unwrap();
        let roi = Roi::new(4.0, 4.0, 3, 3).unwrap();
        let traj = RoiTrajectory {
            rois: vec![roi; 3],
            confidence: vec![1.0; 3],
            low_confidence: vec![false; 3],
        };
        let sig = extract_signal(&seq, &traj).unwrap();
        assert_eq!(sig.samples(), &[30.5, 30.5, 30.5]);
        assert_eq!(sig.sample_rate(), 1.0);
    }

    #[test]
    fn extracted_cooling_blob_recovers_slope() {
        // blob peak cools at 0.01 degC/s; the tracked ROI mean must cool at
        // a proportional rate (checked within 5% against an OLS fit)
        let spec = SceneSpec {
            width: 96,
            height: 72,
            duration: 60.0,
            rate: 4.0,
            background: 28.0,
            blob_peak: 34.0,
            blob_sigma: 6.0,
            path: PathSpec::Static { x: 48.0, y: 36.0 },
            pixel_noise_sd: 0.0,
            peak_drift: -0.01,
            peak_breathing_amp: 0.0,
            peak_breathing_freq: 0.25,
            seed: 11,
        };
        let scene = gen_sequence(&spec).unwrap();
        let initial = select_large_roi(
            &scene.sequence.frames()[0],
            (48.0, 36.0),
            (LARGE_ROI_SCALE_X, LARGE_ROI_SCALE_Y),
        )
        .unwrap();
        let traj = track(&scene.sequence, &initial, &TrackerConfig::default()).unwrap();
        let sig = extract_signal(&scene.sequence, &traj).unwrap();
        let fit = crate::metrics::stv(&sig).unwrap();
        // ROI mean scales the peak drift by the mean Gaussian weight in the
        // ROI; the truth record gives that factor analytically
        let last = scene.sequence.len() - 1;
        let expected = (scene.truth.roi_mean(last, &initial).unwrap()
            - scene.truth.roi_mean(0, &initial).unwrap())
            / (last as f64 / 4.0);
        assert!(
            (fit.slope - expected).abs() <= 0.05 * expected.abs(),
            "slope {} vs expected {expected}",
            fit.slope
        );
    }

    #[test]
    fn corrupted_frame_sample_removed_by_rejection() {
        let spec = SignalSpec {
            duration: 120.0,
            rate: 4.0,
            baseline: 33.0,
            drift_slope: 0.0,
            breathing_amp: 0.1,
            breathing_freq: 0.25,
            noise_sd: 0.02,
            spike_fraction: 0.0,
            spike_amp: 0.0,
            seed: 9,
        };
        let clean = gen_signal(&spec).unwrap().signal;
        let mut corrupted = clean.samples().to_vec();
        corrupted[200] += 6.0;
        let sig = signal(corrupted, 4.0);
        let flags = flag_outliers(&sig, &OutlierConfig::default()).unwrap();
        assert!(flags[200]);
        let cleaned = reject_outliers(&sig, &OutlierConfig::default()).unwrap();
        assert!((cleaned.samples()[200] - clean.samples()[200]).abs() < 0.2);
    }

    #[test]
    fn window_length_rule() {
        let cfg = OutlierConfig::default();
        // 60 s at 8 Hz: one third = 20 s < 30 s minimum, so the minimum binds
        assert_eq!(cfg.window_len(480, 8.0), 240);
        // 300 s at 8 Hz: one third = 100 s > 30 s
        assert_eq!(cfg.window_len(2400, 8.0), 800);
        // never longer than the signal itself
        assert_eq!(cfg.window_len(100, 8.0), 100);
    }

    #[test]
    fn in_range_signal_unchanged() {
        let spec = SignalSpec {
            duration: 90.0,
            rate: 4.0,
            baseline: 33.0,
            drift_slope: -0.001,
            breathing_amp: 0.1,
            breathing_freq: 0.25,
            noise_sd: 0.0,
            spike_fraction: 0.0,
            spike_amp: 0.0,
            seed: 2,
        };
        let sig = gen_signal(&spec).unwrap().signal;
        let out = reject_outliers(&sig, &OutlierConfig::default()).unwrap();
        assert_eq!(sig.samples(), out.samples());
    }

    #[test]
    fn spike_injection_flags_exactly_the_spikes() {
        let spec = SignalSpec {
            duration: 300.0,
            rate: 8.0,
            baseline: 33.0,
            drift_slope: -0.0005,
            breathing_amp: 0.1,
            breathing_freq: 0.25,
            noise_sd: 0.02,
            spike_fraction: 0.01,
            spike_amp: 5.0,
            seed: 21,
        };
        let gen = gen_signal(&spec).unwrap();
        let flags = flag_outliers(&gen.signal, &OutlierConfig::default()).unwrap();
        for &idx in &gen.spike_indices {
            assert!(flags[idx], "spike at {idx} not flagged");
        }
        let clean_flagged = flags
            .iter()
            .enumerate()
            .filter(|(i, &f)| f && !gen.spike_indices.contains(i))
            .count();
        let clean_total = gen.signal.len() - gen.spike_indices.len();
        assert!(
            (clean_flagged as f64) <= 0.02 * clean_total as f64,
            "{clean_flagged} clean samples flagged"
        );
    }

    #[test]
    fn rejection_is_idempotent_on_default_config() {
        let spec = SignalSpec {
            duration: 300.0,
            rate: 8.0,
            baseline: 33.0,
            drift_slope: -0.0005,
            breathing_amp: 0.1,
            breathing_freq: 0.25,
            noise_sd: 0.02,
            spike_fraction: 0.01,
            spike_amp: 5.0,
            seed: 22,
        };
        let gen = gen_signal(&spec).unwrap();
        let once = reject_outliers(&gen.signal, &OutlierConfig::default()).unwrap();
        let twice = reject_outliers(&once, &OutlierConfig::default()).unwrap();
        assert_eq!(once.samples(), twice.samples());
    }

    #[test]
    fn too_short_and_all_outlier_paths() {
        let sig = signal(vec![1.0, 2.0, 3.0], 1.0);
        assert!(matches!(
            reject_outliers(&sig, &OutlierConfig::default()),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn lowpass_passes_dc_exactly() {
        let sig = signal(vec![33.0; 400], 8.0);
        let out = lowpass(&sig, DEFAULT_CUTOFF_HZ).unwrap();
        assert!(out.is_filtered());
        for &v in out.samples() {
            assert!((v - 33.0).abs() < 1e-6, "{v}");
        }
    }

    fn sine(freq: f64, rate: f64, secs: f64) -> ThermalSignal {
        let n = (rate * secs) as usize;
        signal(
            (0..n)
                .map(|k| (2.0 * std::f64::consts::PI * freq * k as f64 / rate).sin())
                .collect(),
            rate,
        )
    }

    /// RMS amplitude over the middle portion, away from end transients.
    fn mid_amplitude(sig: &ThermalSignal) -> f64 {
        let n = sig.len();
        let mid = &sig.samples()[n / 5..n - n / 5];
        let rms = (mid.iter().map(|v| v * v).sum::<f64>() / mid.len() as f64).sqrt();
        rms * std::f64::consts::SQRT_2
    }

    #[test]
    fn lowpass_attenuates_in_band_breathing() {
        let out = lowpass(&sine(0.3, 8.0, 200.0), DEFAULT_CUTOFF_HZ).unwrap();
        assert!(mid_amplitude(&out) <= 0.1, "{}", mid_amplitude(&out));
    }

    #[test]
    fn lowpass_preserves_slow_drift() {
        let out = lowpass(&sine(0.01, 4.0, 300.0), DEFAULT_CUTOFF_HZ).unwrap();
        let amp = mid_amplitude(&out);
        assert!(amp >= 0.89, "{amp}");
    }

    #[test]
    fn lowpass_commutes_with_offset() {
        let base = sine(0.05, 4.0, 120.0);
        let shifted = signal(base.samples().iter().map(|v| v + 7.5).collect(), 4.0);
        let a = lowpass(&base, DEFAULT_CUTOFF_HZ).unwrap();
        let b = lowpass(&shifted, DEFAULT_CUTOFF_HZ).unwrap();
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert!((x + 7.5 - y).abs() < 1e-6);
        }
    }

    #[test]
    fn lowpass_rejects_low_rate() {
        let sig = signal(vec![1.0; 100], 0.1);
        assert!(matches!(
            lowpass(&sig, DEFAULT_CUTOFF_HZ),
            Err(Error::RateTooLow { .. })
        ));
    }

    #[test]
    fn normalize_single_signal_endpoints() {
        let sig = signal(vec![30.0, 31.0, 32.0], 1.0);
        let out = normalize(&[&sig]).unwrap();
        assert_eq!(out[0].samples(), &[0.0, 0.5, 1.0]);
        assert!(out[0].is_normalized());
    }

    #[test]
    fn normalize_shares_range_across_sessions() {
        let a = signal(vec![30.0, 32.0], 1.0);
        let b = signal(vec![31.0, 33.0], 1.0);
        let out = normalize(&[&a, &b]).unwrap();
        let close = |got: &[f64], want: &[f64]| {
            got.iter()
                .zip(want)
                .all(|(g, w)| (g - w).abs() < 1e-12)
        };
        assert!(close(out[0].samples(), &[0.0, 2.0 / 3.0]));
        assert!(close(out[1].samples(), &[1.0 / 3.0, 1.0]));
    }

    #[test]
    fn constant_signal_cannot_normalize() {
        let sig = signal(vec![30.0; 10], 1.0);
        assert!(matches!(normalize(&[&sig]), Err(Error::ConstantSignal)));
    }

    #[test]
    fn normalized_td_equals_scaled_td() {
        let sig = signal(vec![30.0, 30.6, 31.4, 30.2, 32.0], 1.0);
        let range = compute_range(&[&sig]).unwrap();
        let norm = apply_range(&sig, range).unwrap();
        let td = crate::metrics::td(&sig).unwrap();
        let td_n = crate::metrics::td(&norm).unwrap();
        assert!((td_n - td / range.span()).abs() < 1e-12);
    }

    #[test]
    fn resample_identity_when_lengths_match() {
        let sig = signal((0..100).map(|k| 30.0 + (k as f64).sin()).collect(), 4.0);
        let out = resample(&sig, 100).unwrap();
        for (a, b) in sig.samples().iter().zip(out.samples()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((out.sample_rate() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn resample_preserves_lines_and_endpoints() {
        let sig = signal((0..50).map(|k| 1.0 + 0.25 * k as f64).collect(), 2.0);
        let out = resample(&sig, 17).unwrap();
        let slope_per_sec = 0.25 * 2.0;
        for (i, &v) in out.samples().iter().enumerate() {
            let t = i as f64 / out.sample_rate();
            assert!((v - (1.0 + slope_per_sec * t)).abs() < 1e-12);
        }
        assert_eq!(*out.samples().last().unwrap(), *sig.samples().last().unwrap());
    }

    #[test]
    fn resample_hundred_seconds_to_hundred_samples() {
        // the desk-scale version of extracting 100 samples from a 100 s signal
        let sig = signal((0..801).map(|k| 33.0 + 0.001 * k as f64).collect(), 8.0);
        let out = resample(&sig, 100).unwrap();
        assert_eq!(out.len(), 100);
        assert!((out.sample_rate() - 0.99).abs() < 0.02, "{}", out.sample_rate());
    }

    #[test]
    fn signal_csv_round_trip_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let sig = ThermalSignal::with_flags(vec![0.1, 0.4, 1.0], 4.0, true, true).unwrap();
        write_signal_csv(&sig, &path).unwrap();
        let back = read_signal_csv(&path).unwrap();
        assert_eq!(sig, back);
        // sidecar gone: provenance resets, rate derived from the time column
        std::fs::remove_file(path.with_extension("meta.json")).unwrap();
        let derived = read_signal_csv(&path).unwrap();
        assert!(!derived.is_filtered() && !derived.is_normalized());
        assert!((derived.sample_rate() - 4.0).abs() < 1e-9);
    }
}
