//! `thermavar synth`: render spec-driven synthetic sequences and signals
//! together with their ground truth.

use clap::Args;
use serde::Serialize;
use thermavar::frame::write_sequence;
use thermavar::pipeline::write_signal_csv;
use thermavar::synth::{
    gen_sequence, gen_signal, load_config, SignalSpec, SynthConfig,
};
use thermavar::{Error, Result};

use crate::common::{atomic_write, ensure_dir, Manifest};
use crate::Cli;

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Session preset rendered when no --config is given.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,

    /// Preset duration, seconds.
    #[arg(long, default_value_t = 300.0)]
    pub duration: f64,

    /// Preset sample rate, Hz.
    #[arg(long, default_value_t = 4.0)]
    pub rate: f64,

    /// Preset RNG seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Rest,
    MathEasy,
    MathHard,
    RespiratoryReference,
}

impl Preset {
    fn spec(&self, duration: f64, rate: f64, seed: u64) -> SignalSpec {
        match self {
            Preset::Rest => SignalSpec::rest(duration, rate, seed),
            Preset::MathEasy => SignalSpec::math_easy(duration, rate, seed),
            Preset::MathHard => SignalSpec::math_hard(duration, rate, seed),
            Preset::RespiratoryReference => SignalSpec::respiratory_reference(seed),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Preset::Rest => "rest",
            Preset::MathEasy => "math_easy",
            Preset::MathHard => "math_hard",
            Preset::RespiratoryReference => "respiratory_reference",
        }
    }
}

#[derive(Serialize)]
struct SignalTruth {
    name: String,
    spec: SignalSpec,
    spike_indices: Vec<usize>,
}

#[derive(Serialize)]
struct SceneTruthOut {
    name: String,
    spec: thermavar::synth::SceneSpec,
    centers: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct TruthFile {
    signals: Vec<SignalTruth>,
    scenes: Vec<SceneTruthOut>,
}

pub fn run(cli: &Cli, args: &SynthArgs) -> Result<()> {
    let config: SynthConfig = match (&cli.config, args.preset) {
        (Some(path), _) => load_config(path)?,
        (None, Some(preset)) => {
            let spec = preset.spec(args.duration, args.rate, args.seed);
            SynthConfig {
                signals: vec![thermavar::synth::NamedSignalSpec {
                    name: preset.name().to_string(),
                    spec,
                }],
                scenes: Vec::new(),
            }
        }
        (None, None) => {
            return Err(Error::InvalidSpec(
                "synth needs --config <file> or --preset <name>".into(),
            ))
        }
    };

    ensure_dir(&cli.output)?;
    let mut truth = TruthFile {
        signals: Vec::new(),
        scenes: Vec::new(),
    };
    let mut outputs = Vec::new();

    for named in &config.signals {
        let generated = gen_signal(&named.spec)?;
        let path = cli.output.join(format!("{}.csv", named.name));
        write_signal_csv(&generated.signal, &path)?;
        truth.signals.push(SignalTruth {
            name: named.name.clone(),
            spec: generated.spec,
            spike_indices: generated.spike_indices,
        });
        println!("signal {} -> {}", named.name, path.display());
        outputs.push(path);
    }

    for named in &config.scenes {
        let generated = gen_sequence(&named.spec)?;
        let path = cli.output.join(format!("{}.nhtf", named.name));
        write_sequence(&generated.sequence, &path)?;
        truth.scenes.push(SceneTruthOut {
            name: named.name.clone(),
            spec: named.spec,
            centers: generated.truth.centers.clone(),
        });
        println!(
            "scene {} ({} frames) -> {}",
            named.name,
            generated.sequence.len(),
            path.display()
        );
        outputs.push(path);
    }

    let truth_path = cli.output.join("truth.json");
    let json = serde_json::to_string_pretty(&truth).expect("truth serializes");
    atomic_write(&truth_path, json.as_bytes())?;
    outputs.push(truth_path);

    let mut manifest = Manifest::new("synth", &config);
    if let Some(path) = &cli.config {
        manifest.input(path);
    }
    for path in &outputs {
        manifest.output(path);
    }
    manifest.write(&cli.output)
}
