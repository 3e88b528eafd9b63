//! `thermavar metrics`: outlier rejection, the sixteen-metric grid, and the
//! respiratory quality index for one person's session signals.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use thermavar::metrics::{metric_set, psqi, MetricSet, MetricUnits, PersonContext, SqiBand};
use thermavar::pipeline::{read_signal_csv, reject_outliers, OutlierConfig, ThermalSignal};
use thermavar::{Error, Result};

use crate::common::{atomic_write, ensure_dir, Manifest, SessionFile};
use crate::{Cli, Format, NormScope};

#[derive(Args, Debug)]
pub struct MetricsArgs {
    /// Signal CSV files (one per session, same person).
    #[arg(long, num_args = 1.., required = true)]
    pub input: Vec<PathBuf>,

    /// Participant identifier recorded in the outputs.
    #[arg(long, default_value = "P01")]
    pub participant: String,

    /// Session labels matching --input order; defaults to the file stems.
    #[arg(long, num_args = 0..)]
    pub sessions: Vec<String>,

    /// Self-reported stress scores (0-10) matching --input order.
    #[arg(long, num_args = 0..)]
    pub self_report: Vec<f64>,

    /// Tukey constant.
    #[arg(long, default_value_t = 1.5)]
    pub outlier_g: f64,

    /// Sliding window as a fraction of the signal length.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub window_fraction: f64,

    /// Minimum sliding-window length in seconds.
    #[arg(long, default_value_t = 30.0)]
    pub min_window_seconds: f64,
}

#[derive(Serialize)]
struct MetricsConfigEcho {
    participant: String,
    sessions: Vec<String>,
    norm: NormScope,
    cutoff_hz: f64,
    band: (f64, f64),
    outlier: OutlierConfig,
    /// Shared min/max actually used per session source, for reproducibility.
    ranges: Vec<RangeEcho>,
}

#[derive(Serialize)]
struct RangeEcho {
    session: String,
    raw_min: f64,
    raw_max: f64,
    filtered_min: f64,
    filtered_max: f64,
}

pub fn run(cli: &Cli, args: &MetricsArgs) -> Result<()> {
    let labels = session_labels(args)?;
    if !args.self_report.is_empty() && args.self_report.len() != args.input.len() {
        return Err(Error::LengthMismatch {
            left: args.self_report.len(),
            right: args.input.len(),
        });
    }
    let outlier_cfg = OutlierConfig {
        g: args.outlier_g,
        window_fraction: args.window_fraction,
        min_window_seconds: args.min_window_seconds,
    };

    let mut rejected: Vec<ThermalSignal> = Vec::with_capacity(args.input.len());
    for path in &args.input {
        let raw = read_signal_csv(path)?;
        if raw.is_filtered() || raw.is_normalized() {
            return Err(Error::InvalidSignal(format!(
                "{} carries processed provenance; metrics expects raw extracted signals",
                path.display()
            )));
        }
        rejected.push(reject_outliers(&raw, &outlier_cfg)?);
    }

    // normalization context: one pooled range, or one per session
    let contexts: Vec<PersonContext> = match cli.norm {
        NormScope::Pooled => {
            let refs: Vec<&ThermalSignal> = rejected.iter().collect();
            let ctx = PersonContext::from_signals(&refs, cli.cutoff)?;
            vec![ctx; rejected.len()]
        }
        NormScope::PerSession => rejected
            .iter()
            .map(|s| PersonContext::from_signals(&[s], cli.cutoff))
            .collect::<Result<_>>()?,
    };

    let band = SqiBand {
        f_min: cli.band.0,
        f_max: cli.band.1,
    };
    ensure_dir(&cli.output)?;

    let mut manifest_cfg = MetricsConfigEcho {
        participant: args.participant.clone(),
        sessions: labels.clone(),
        norm: cli.norm,
        cutoff_hz: cli.cutoff,
        band: (band.f_min, band.f_max),
        outlier: outlier_cfg,
        ranges: Vec::new(),
    };
    let mut outputs = Vec::new();
    let mut csv_rows = Vec::new();

    for (i, (signal, ctx)) in rejected.iter().zip(&contexts).enumerate() {
        let set = metric_set(signal, ctx)?;
        let quality = psqi(signal, &band)?;
        manifest_cfg.ranges.push(RangeEcho {
            session: labels[i].clone(),
            raw_min: ctx.raw.min,
            raw_max: ctx.raw.max,
            filtered_min: ctx.filtered.min,
            filtered_max: ctx.filtered.max,
        });

        let session = SessionFile {
            participant_id: args.participant.clone(),
            session_label: labels[i].clone(),
            metrics: set,
            units: MetricUnits::default(),
            psqi: Some(quality),
            self_report: args.self_report.get(i).copied(),
        };
        let out_path = cli.output.join(format!(
            "{}_{}.metrics.json",
            sanitize(&args.participant),
            sanitize(&labels[i])
        ));
        let json = serde_json::to_string_pretty(&session).expect("session serializes");
        atomic_write(&out_path, json.as_bytes())?;
        outputs.push(out_path);
        csv_rows.push((labels[i].clone(), set, quality));
        println!(
            "{} {}: SDSTV {:.6}, pSQI {:.3} -> {}",
            args.participant,
            labels[i],
            set.SDSTV,
            quality,
            outputs.last().unwrap().display()
        );
    }

    if matches!(cli.format, Format::Csv) {
        let csv_path = cli.output.join("metrics.csv");
        let mut text = String::from("participant,session");
        for name in MetricSet::NAMES {
            text.push(',');
            text.push_str(name);
        }
        text.push_str(",psqi\n");
        for (label, set, quality) in &csv_rows {
            text.push_str(&format!("{},{label}", args.participant));
            for v in set.values() {
                text.push_str(&format!(",{v}"));
            }
            text.push_str(&format!(",{quality}\n"));
        }
        atomic_write(&csv_path, text.as_bytes())?;
        outputs.push(csv_path);
    }

    let mut manifest = Manifest::new("metrics", manifest_cfg);
    for path in &args.input {
        manifest.input(path);
    }
    for path in &outputs {
        manifest.output(path);
    }
    manifest.write(&cli.output)
}

fn session_labels(args: &MetricsArgs) -> Result<Vec<String>> {
    if args.sessions.is_empty() {
        Ok(args
            .input
            .iter()
            .map(|p| {
                p.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "session".into())
            })
            .collect())
    } else if args.sessions.len() == args.input.len() {
        Ok(args.sessions.clone())
    } else {
        Err(Error::LengthMismatch {
            left: args.sessions.len(),
            right: args.input.len(),
        })
    }
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}
