//! `thermavar track`: ROI selection, tracking, and raw signal extraction.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use thermavar::frame::read_sequence;
use thermavar::pipeline::{extract_signal, write_signal_csv};
use thermavar::tracker::{
    select_large_roi, track, write_trajectory_csv, TemplateUpdate, TrackerConfig,
    LARGE_ROI_SCALE_X, LARGE_ROI_SCALE_Y,
};
use thermavar::{Error, Result};

use crate::common::{ensure_dir, Manifest};
use crate::{Cli, Pair};

#[derive(Args, Debug)]
pub struct TrackArgs {
    /// NHTF file or CSV bundle directory.
    #[arg(long)]
    pub input: PathBuf,

    /// ROI expansion factors "SX,SY" applied to the 9x9 small ROI.
    #[arg(long, value_parser = crate::parse_pair)]
    pub scale: Option<Pair>,

    /// Search radius per axis, pixels.
    #[arg(long, default_value_t = 5)]
    pub max_step: usize,

    /// Confidence below which a frame keeps the previous center.
    #[arg(long, default_value_t = 0.4)]
    pub min_confidence: f64,

    /// Template update policy.
    #[arg(long, value_enum, default_value_t = TemplateMode::Anchor)]
    pub template: TemplateMode,

    /// Blend factor when --template=blend.
    #[arg(long, default_value_t = 0.05)]
    pub blend_alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemplateMode {
    Anchor,
    Blend,
}

#[derive(Serialize)]
struct TrackConfigEcho {
    input: String,
    seed_point: (f64, f64),
    scale: (f64, f64),
    max_step: usize,
    min_confidence: f64,
    template: TemplateMode,
    blend_alpha: f64,
    roi: (f64, f64, usize, usize),
}

pub fn run(cli: &Cli, args: &TrackArgs) -> Result<()> {
    let seed = cli
        .seed_point
        .ok_or_else(|| Error::InvalidSpec("track requires --seed-point X,Y".into()))?;
    let scale = args
        .scale
        .map_or((LARGE_ROI_SCALE_X, LARGE_ROI_SCALE_Y), |p| (p.0, p.1));

    let seq = read_sequence(&args.input)?;
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    let roi = select_large_roi(&seq.frames()[0], (seed.0, seed.1), scale)?;
    let cfg = TrackerConfig {
        max_step: args.max_step,
        min_confidence: args.min_confidence,
        template: match args.template {
            TemplateMode::Anchor => TemplateUpdate::Anchor,
            TemplateMode::Blend => TemplateUpdate::Blend {
                alpha: args.blend_alpha,
            },
        },
    };
    let traj = track(&seq, &roi, &cfg)?;
    let signal = extract_signal(&seq, &traj)?;

    ensure_dir(&cli.output)?;
    let traj_path = cli.output.join("trajectory.csv");
    let signal_path = cli.output.join("signal.csv");
    write_trajectory_csv(&traj, &seq, &traj_path)?;
    write_signal_csv(&signal, &signal_path)?;

    let mut manifest = Manifest::new(
        "track",
        TrackConfigEcho {
            input: args.input.display().to_string(),
            seed_point: (seed.0, seed.1),
            scale,
            max_step: args.max_step,
            min_confidence: args.min_confidence,
            template: args.template,
            blend_alpha: args.blend_alpha,
            roi: (roi.center_x, roi.center_y, roi.width, roi.height),
        },
    );
    manifest.input(&args.input);
    manifest.output(&traj_path);
    manifest.output(&signal_path);
    manifest.write(&cli.output)?;

    let low = traj.low_confidence.iter().filter(|&&f| f).count();
    println!(
        "tracked {} frames ({} low-confidence), ROI {}x{} at ({:.1}, {:.1})",
        traj.len(),
        low,
        roi.width,
        roi.height,
        roi.center_x,
        roi.center_y
    );
    Ok(())
}
