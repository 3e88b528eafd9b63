//! `thermavar compare`: the session-comparison workflow over a cohort of
//! metric files, one repeated-measures ANOVA row per metric plus post-hoc
//! pairs, emitted as JSON and CSV.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use thermavar::stats::{compare_sessions, ComparisonReport, SessionRecord};
use thermavar::{Error, Result};

use crate::common::{atomic_write, ensure_dir, Manifest, SessionFile};
use crate::Cli;

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Session metrics JSON files, or directories scanned for
    /// `*.metrics.json`.
    #[arg(long, num_args = 1.., required = true)]
    pub input: Vec<PathBuf>,

    /// Extra artifacts: `plotdata` writes a boxplot-ready long-format CSV.
    #[arg(long)]
    pub emit: Option<String>,
}

#[derive(Serialize)]
struct CompareConfigEcho {
    inputs: Vec<String>,
    emit: Option<String>,
}

pub fn run(cli: &Cli, args: &CompareArgs) -> Result<()> {
    let files = collect_inputs(&args.input)?;
    if files.is_empty() {
        return Err(Error::IncompleteTable("no session metrics files found".into()));
    }
    let mut sessions = Vec::with_capacity(files.len());
    for path in &files {
        sessions.push(SessionFile::load(path)?);
    }
    let records: Vec<SessionRecord> = sessions.iter().map(SessionFile::to_record).collect();
    let report = compare_sessions(&records)?;

    ensure_dir(&cli.output)?;
    let mut outputs = Vec::new();

    let json_path = cli.output.join("report.json");
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    atomic_write(&json_path, json.as_bytes())?;
    outputs.push(json_path);

    let csv_path = cli.output.join("report.csv");
    atomic_write(&csv_path, anova_csv(&report).as_bytes())?;
    outputs.push(csv_path);

    let posthoc_path = cli.output.join("posthoc.csv");
    atomic_write(&posthoc_path, posthoc_csv(&report).as_bytes())?;
    outputs.push(posthoc_path);

    if args.emit.as_deref() == Some("plotdata") {
        let plot_path = cli.output.join("plotdata.csv");
        atomic_write(&plot_path, plotdata_csv(&sessions).as_bytes())?;
        outputs.push(plot_path);
    }

    let mut manifest = Manifest::new(
        "compare",
        CompareConfigEcho {
            inputs: files.iter().map(|p| p.display().to_string()).collect(),
            emit: args.emit.clone(),
        },
    );
    for path in &files {
        manifest.input(path);
    }
    for path in &outputs {
        manifest.output(path);
    }
    manifest.write(&cli.output)?;

    for row in &report.anova {
        println!(
            "{:<10} F({},{}) = {:>8.3}  p = {:.4}  eta_p2 = {:.3} {}",
            row.metric,
            row.df_effect,
            row.df_error,
            row.f,
            row.p,
            row.partial_eta_sq,
            stars(row.p)
        );
    }
    Ok(())
}

fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for path in inputs {
        if path.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(|e| Error::IoFailure {
                    path: path.clone(),
                    source: e,
                })?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.file_name().map_or(false, |n| {
                    n.to_string_lossy().ends_with(".metrics.json")
                }))
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            files.push(path.clone());
        }
    }
    Ok(files)
}

fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

fn anova_csv(report: &ComparisonReport) -> String {
    let mut text = String::from("metric,df_effect,df_error,F,p,partial_eta_sq,stars\n");
    for row in &report.anova {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.metric, row.df_effect, row.df_error, row.f, row.p, row.partial_eta_sq,
            stars(row.p)
        ));
    }
    text
}

fn posthoc_csv(report: &ComparisonReport) -> String {
    let mut text = String::from("metric,session_a,session_b,t,df,p_raw,p_bonferroni,stars\n");
    for row in &report.post_hoc {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.metric,
            row.pair.0,
            row.pair.1,
            row.t,
            row.df,
            row.p_raw,
            row.p_bonferroni,
            stars(row.p_bonferroni)
        ));
    }
    text
}

/// Long-format values ready for boxplotting: one row per
/// participant-session-metric, plus the self-report when present.
fn plotdata_csv(sessions: &[SessionFile]) -> String {
    let mut text = String::from("participant,session,metric,value\n");
    for s in sessions {
        for (name, value) in thermavar::metrics::MetricSet::NAMES
            .iter()
            .zip(s.metrics.values())
        {
            text.push_str(&format!(
                "{},{},{name},{value}\n",
                s.participant_id, s.session_label
            ));
        }
        if let Some(score) = s.self_report {
            text.push_str(&format!(
                "{},{},self_report,{score}\n",
                s.participant_id, s.session_label
            ));
        }
    }
    text
}
