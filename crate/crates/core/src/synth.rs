//! Deterministic generators for signals and frame sequences with analytic
//! ground truth, so every pipeline stage can be checked against values that
//! never flow through the code paths under test.
//!
//! Identical spec + seed gives bit-identical output, independent of thread
//! schedule: every frame and every recording derives its own RNG stream from
//! the seed and its index.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{FrameSequence, ThermalFrame};
use crate::par;
use crate::pipeline::ThermalSignal;
use crate::tracker::Roi;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    splitmix64(seed ^ splitmix64(a.wrapping_add(splitmix64(b))))
}

/// Recipe for a 1-D thermal signal: baseline plus linear drift (vasomotor
/// trend), a breathing sinusoid, white noise, and optional spikes standing in
/// for tracking glitches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    /// Seconds.
    pub duration: f64,
    /// Hz.
    pub rate: f64,
    /// degC.
    pub baseline: f64,
    /// degC per second.
    #[serde(default)]
    pub drift_slope: f64,
    /// degC.
    #[serde(default)]
    pub breathing_amp: f64,
    /// Hz; expected inside the respiratory band [0.1, 0.85].
    #[serde(default = "default_breathing_freq")]
    pub breathing_freq: f64,
    /// degC.
    #[serde(default)]
    pub noise_sd: f64,
    /// Fraction of samples hit by a spike, at most 0.2.
    #[serde(default)]
    pub spike_fraction: f64,
    /// degC added at each spiked sample.
    #[serde(default)]
    pub spike_amp: f64,
    pub seed: u64,
}

fn default_breathing_freq() -> f64 {
    0.25
}

impl SignalSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.rate > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "duration {} and rate {} must be positive",
                self.duration, self.rate
            )));
        }
        if self.breathing_freq >= self.rate / 2.0 {
            return Err(Error::InvalidSpec(format!(
                "breathing_freq {} not below Nyquist {}",
                self.breathing_freq,
                self.rate / 2.0
            )));
        }
        if !(0.0..=0.2).contains(&self.spike_fraction) {
            return Err(Error::InvalidSpec(format!(
                "spike_fraction {} outside [0, 0.2]",
                self.spike_fraction
            )));
        }
        if self.noise_sd < 0.0 {
            return Err(Error::InvalidSpec("noise_sd must be >= 0".into()));
        }
        let n = (self.duration * self.rate).round() as usize;
        if n < 2 {
            return Err(Error::InvalidSpec(format!(
                "duration x rate gives only {n} samples"
            )));
        }
        Ok(())
    }

    /// Resting session: slight warming, calm breathing, low noise.
    pub fn rest(duration: f64, rate: f64, seed: u64) -> Self {
        Self {
            duration,
            rate,
            baseline: 33.0,
            drift_slope: 0.001,
            breathing_amp: 0.10,
            breathing_freq: 0.25,
            noise_sd: 0.02,
            spike_fraction: 0.0,
            spike_amp: 0.0,
            seed,
        }
    }

    /// Easy cognitive task: clear nasal decline, breathing close to rest.
    pub fn math_easy(duration: f64, rate: f64, seed: u64) -> Self {
        Self {
            duration,
            rate,
            baseline: 33.0,
            drift_slope: -0.004,
            breathing_amp: 0.11,
            breathing_freq: 0.27,
            noise_sd: 0.025,
            spike_fraction: 0.0,
            spike_amp: 0.0,
            seed,
        }
    }

    /// Stressed task: weaker decline than the easy task but faster, larger
    /// breathing and extra jitter.
    pub fn math_hard(duration: f64, rate: f64, seed: u64) -> Self {
        Self {
            duration,
            rate,
            baseline: 33.0,
            drift_slope: -0.003,
            breathing_amp: 0.15,
            breathing_freq: 0.30,
            noise_sd: 0.05,
            spike_fraction: 0.0,
            spike_amp: 0.0,
            seed,
        }
    }

    /// Drift + breathing + noise mix whose band-power ratio sits in the
    /// high-0.6 range reported for nasal signals.
    pub fn respiratory_reference(seed: u64) -> Self {
        Self {
            duration: 300.0,
            rate: 4.0,
            baseline: 33.0,
            drift_slope: -0.0008,
            breathing_amp: 0.10,
            breathing_freq: 0.25,
            noise_sd: 0.05,
            spike_fraction: 0.0,
            spike_amp: 0.0,
            seed,
        }
    }
}

/// Generator output: the signal plus everything a test oracle needs.
#[derive(Debug, Clone)]
pub struct GeneratedSignal {
    pub signal: ThermalSignal,
    /// Echo of the generating spec.
    pub spec: SignalSpec,
    /// Sorted indices that received a spike.
    pub spike_indices: Vec<usize>,
}

/// Renders `x(k) = baseline + drift*t + amp*sin(2 pi f t) + noise + spikes`.
pub fn gen_signal(spec: &SignalSpec) -> Result<GeneratedSignal> {
    spec.validate()?;
    let n = (spec.duration * spec.rate).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sd)
        .map_err(|e| Error::InvalidSpec(format!("noise_sd: {e}")))?;
    let two_pi_f = 2.0 * std::f64::consts::PI * spec.breathing_freq;

    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 / spec.rate;
        let v = spec.baseline
            + spec.drift_slope * t
            + spec.breathing_amp * (two_pi_f * t).sin()
            + noise.sample(&mut rng);
        samples.push(v);
    }

    let spike_count = (spec.spike_fraction * n as f64).round() as usize;
    let mut spike_indices = rand::seq::index::sample(&mut rng, n, spike_count).into_vec();
    spike_indices.sort_unstable();
    for &idx in &spike_indices {
        samples[idx] += spec.spike_amp;
    }

    Ok(GeneratedSignal {
        signal: ThermalSignal::new(samples, spec.rate)?,
        spec: *spec,
        spike_indices,
    })
}

/// Generates a batch of signals, data-parallel across specs.
pub fn gen_signals(specs: &[SignalSpec]) -> Result<Vec<GeneratedSignal>> {
    par::try_map_indexed(specs.len(), |i| gen_signal(&specs[i]))
}

/// Blob center trajectory as a function of time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathSpec {
    Static { x: f64, y: f64 },
    Linear { x0: f64, y0: f64, vx: f64, vy: f64 },
}

impl PathSpec {
    pub fn at(&self, t: f64) -> (f64, f64) {
        match *self {
            PathSpec::Static { x, y } => (x, y),
            PathSpec::Linear { x0, y0, vx, vy } => (x0 + vx * t, y0 + vy * t),
        }
    }
}

/// Recipe for a synthetic thermal scene: a warm 2-D Gaussian blob moving over
/// a flat background, with optional temporal modulation of the blob peak
/// (drift and a breathing sinusoid) and per-pixel sensor noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    /// Seconds.
    pub duration: f64,
    /// Frames per second.
    pub rate: f64,
    /// degC.
    pub background: f64,
    /// Blob peak temperature at t = 0, degC.
    pub blob_peak: f64,
    /// Blob spatial sigma, pixels.
    pub blob_sigma: f64,
    pub path: PathSpec,
    /// degC.
    #[serde(default)]
    pub pixel_noise_sd: f64,
    /// degC per second added to the blob peak.
    #[serde(default)]
    pub peak_drift: f64,
    /// degC; breathing modulation of the blob peak.
    #[serde(default)]
    pub peak_breathing_amp: f64,
    /// Hz.
    #[serde(default = "default_breathing_freq")]
    pub peak_breathing_freq: f64,
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width < 4 || self.height < 4 {
            return Err(Error::InvalidSpec(format!(
                "frame {}x{} too small",
                self.width, self.height
            )));
        }
        if !(self.duration > 0.0 && self.rate > 0.0) {
            return Err(Error::InvalidSpec("duration and rate must be positive".into()));
        }
        if !(self.blob_sigma > 0.0) {
            return Err(Error::InvalidSpec("blob_sigma must be positive".into()));
        }
        if self.pixel_noise_sd < 0.0 {
            return Err(Error::InvalidSpec("pixel_noise_sd must be >= 0".into()));
        }
        let n = self.frame_count();
        if n < 1 {
            return Err(Error::InvalidSpec("zero frames".into()));
        }
        // the blob must stay at least 2 sigma inside the frame everywhere
        for k in 0..n {
            let (cx, cy) = self.path.at(k as f64 / self.rate);
            let m = 2.0 * self.blob_sigma;
            if cx < m
                || cy < m
                || cx > (self.width - 1) as f64 - m
                || cy > (self.height - 1) as f64 - m
            {
                return Err(Error::InvalidSpec(format!(
                    "blob center ({cx:.1}, {cy:.1}) at frame {k} closer than 2 sigma to the border"
                )));
            }
        }
        Ok(())
    }

    pub fn frame_count(&self) -> usize {
        (self.duration * self.rate).round() as usize
    }

    /// Blob peak temperature at time `t`.
    pub fn peak_at(&self, t: f64) -> f64 {
        self.blob_peak
            + self.peak_drift * t
            + self.peak_breathing_amp
                * (2.0 * std::f64::consts::PI * self.peak_breathing_freq * t).sin()
    }

    /// Noise-free model temperature at pixel `(x, y)` and time `t`, after the
    /// same f32 quantization the renderer applies.
    fn model_at(&self, x: usize, y: usize, t: f64, cx: f64, cy: f64) -> f32 {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        let g = (-(dx * dx + dy * dy) / (2.0 * self.blob_sigma * self.blob_sigma)).exp();
        (self.background + (self.peak_at(t) - self.background) * g) as f32
    }
}

/// Analytic ground truth for a generated scene.
#[derive(Debug, Clone)]
pub struct SceneTruth {
    spec: SceneSpec,
    /// Exact blob center per frame.
    pub centers: Vec<(f64, f64)>,
}

impl SceneTruth {
    /// Noise-free mean temperature the pipeline's spatial average would see
    /// over `roi` at `frame`, straight from the generating model.
    pub fn roi_mean(&self, frame: usize, roi: &Roi) -> Result<f64> {
        let rect = roi.pixel_rect(self.spec.width, self.spec.height)?;
        let t = frame as f64 / self.spec.rate;
        let (cx, cy) = self.centers[frame];
        let mut sum = 0.0;
        for y in rect.y0..rect.y0 + rect.height {
            for x in rect.x0..rect.x0 + rect.width {
                sum += self.spec.model_at(x, y, t, cx, cy) as f64;
            }
        }
        Ok(sum / (rect.width * rect.height) as f64)
    }

    /// Blob peak temperature at `frame`.
    pub fn peak_temp(&self, frame: usize) -> f64 {
        self.spec.peak_at(frame as f64 / self.spec.rate)
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedScene {
    pub sequence: FrameSequence,
    pub truth: SceneTruth,
}

/// Renders a scene frame by frame (data-parallel; each frame has its own
/// seed-derived RNG stream).
pub fn gen_sequence(spec: &SceneSpec) -> Result<GeneratedScene> {
    spec.validate()?;
    let n = spec.frame_count();
    let centers: Vec<(f64, f64)> = (0..n).map(|k| spec.path.at(k as f64 / spec.rate)).collect();

    let frames = par::try_map_indexed(n, |k| -> Result<ThermalFrame> {
        let t = k as f64 / spec.rate;
        let (cx, cy) = centers[k];
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, k as u64, 0xF7A3));
        let noise = Normal::new(0.0, spec.pixel_noise_sd)
            .map_err(|e| Error::InvalidSpec(format!("pixel_noise_sd: {e}")))?;
        let mut temps = Vec::with_capacity(spec.width * spec.height);
        for y in 0..spec.height {
            for x in 0..spec.width {
                let clean = spec.model_at(x, y, t, cx, cy) as f64;
                temps.push((clean + noise.sample(&mut rng)) as f32);
            }
        }
        ThermalFrame::new(spec.width, spec.height, t, temps)
    })?;

    Ok(GeneratedScene {
        sequence: FrameSequence::new(frames, spec.rate as f32)?,
        truth: SceneTruth {
            spec: *spec,
            centers,
        },
    })
}

/// The three session types of the stress-induction protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionPreset {
    Rest,
    MathEasy,
    MathHard,
}

impl SessionPreset {
    pub const ALL: [SessionPreset; 3] =
        [SessionPreset::Rest, SessionPreset::MathEasy, SessionPreset::MathHard];

    pub fn label(&self) -> &'static str {
        match self {
            SessionPreset::Rest => "Rest",
            SessionPreset::MathEasy => "MathEasy",
            SessionPreset::MathHard => "MathHard",
        }
    }

    pub fn base_spec(&self, duration: f64, rate: f64, seed: u64) -> SignalSpec {
        match self {
            SessionPreset::Rest => SignalSpec::rest(duration, rate, seed),
            SessionPreset::MathEasy => SignalSpec::math_easy(duration, rate, seed),
            SessionPreset::MathHard => SignalSpec::math_hard(duration, rate, seed),
        }
    }
}

/// Between-participant and between-session spread applied on top of the
/// session presets. Directions follow the observed pattern (declines under
/// load, higher variability under stressors); magnitudes are chosen so that
/// endpoint-based metrics stay noisy across participants while
/// variability-based ones separate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohortJitter {
    /// SD of the per-session drift perturbation, degC/s.
    pub drift_sd: f64,
    /// Relative half-range of the breathing amplitude multiplier.
    pub amp_rel: f64,
    /// Relative half-range of the noise multiplier.
    pub noise_rel: f64,
    /// Relative half-range of the breathing frequency multiplier.
    pub freq_rel: f64,
    /// SD of the per-participant baseline offset, degC.
    pub baseline_sd: f64,
}

impl Default for CohortJitter {
    fn default() -> Self {
        Self {
            drift_sd: 0.004,
            amp_rel: 0.2,
            noise_rel: 0.2,
            freq_rel: 0.15,
            baseline_sd: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub participants: usize,
    /// Seconds per session recording.
    pub duration: f64,
    /// Hz.
    pub rate: f64,
    pub seed: u64,
    pub jitter: CohortJitter,
}

impl CohortSpec {
    pub fn new(participants: usize, duration: f64, rate: f64, seed: u64) -> Self {
        Self {
            participants,
            duration,
            rate,
            seed,
            jitter: CohortJitter::default(),
        }
    }
}

/// One synthetic participant-session recording.
#[derive(Debug, Clone)]
pub struct CohortRecording {
    pub participant_id: String,
    pub session: SessionPreset,
    /// The per-recording spec after jitter, for reproducibility.
    pub spec: SignalSpec,
    pub signal: ThermalSignal,
}

/// Generates a full Rest/MathEasy/MathHard cohort, one recording per
/// participant and session (data-parallel across recordings).
pub fn gen_cohort(spec: &CohortSpec) -> Result<Vec<CohortRecording>> {
    if spec.participants < 2 {
        return Err(Error::InvalidSpec(format!(
            "a cohort needs >= 2 participants, got {}",
            spec.participants
        )));
    }
    let sessions = SessionPreset::ALL;
    let total = spec.participants * sessions.len();
    par::try_map_indexed(total, |idx| {
        let p = idx / sessions.len();
        let s = idx % sessions.len();
        let session = sessions[s];

        // participant-level draw: shared baseline offset across sessions
        let mut p_rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, p as u64, 0xBA5E));
        let baseline_offset =
            Normal::new(0.0, spec.jitter.baseline_sd).unwrap().sample(&mut p_rng);

        // session-level draws
        let mut s_rng =
            ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, p as u64, 0x5E55 + s as u64));
        let drift_shift = Normal::new(0.0, spec.jitter.drift_sd).unwrap().sample(&mut s_rng);
        let rel = |half: f64, rng: &mut ChaCha8Rng| {
            1.0 + Uniform::new_inclusive(-half, half).sample(rng)
        };
        let amp_mul = rel(spec.jitter.amp_rel, &mut s_rng);
        let noise_mul = rel(spec.jitter.noise_rel, &mut s_rng);
        let freq_mul = rel(spec.jitter.freq_rel, &mut s_rng);

        let base = session.base_spec(spec.duration, spec.rate, 0);
        let jittered = SignalSpec {
            baseline: base.baseline + baseline_offset,
            drift_slope: base.drift_slope + drift_shift,
            breathing_amp: base.breathing_amp * amp_mul,
            breathing_freq: (base.breathing_freq * freq_mul).min(spec.rate / 2.0 * 0.9),
            noise_sd: base.noise_sd * noise_mul,
            seed: derive_seed(spec.seed, p as u64 * 31 + s as u64, 0x51C),
            ..base
        };
        let generated = gen_signal(&jittered)?;
        Ok(CohortRecording {
            participant_id: format!("P{:02}", p + 1),
            session,
            spec: jittered,
            signal: generated.signal,
        })
    })
}

/// Named spec collections read from a TOML or JSON config file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SynthConfig {
    #[serde(default)]
    pub signals: Vec<NamedSignalSpec>,
    #[serde(default)]
    pub scenes: Vec<NamedSceneSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedSignalSpec {
    pub name: String,
    #[serde(flatten)]
    pub spec: SignalSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedSceneSpec {
    pub name: String,
    #[serde(flatten)]
    pub spec: SceneSpec,
}

/// Loads a [`SynthConfig`] from `.toml` or `.json`.
pub fn load_config(path: &std::path::Path) -> Result<SynthConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let is_json = path.extension().map_or(false, |e| e == "json");
    let config: SynthConfig = if is_json {
        serde_json::from_str(&text).map_err(|e| Error::InvalidSpec(e.to_string()))?
    } else {
        toml::from_str(&text).map_err(|e| Error::InvalidSpec(e.to_string()))?
    };
    for s in &config.signals {
        s.spec.validate()?;
    }
    for s in &config.scenes {
        s.spec.validate()?;
    }
    Ok(config)
}
