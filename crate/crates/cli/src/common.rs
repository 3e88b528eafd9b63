//! Shared CLI plumbing: manifests, atomic writes, and the on-disk session
//! file format consumed by `compare`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thermavar::metrics::{MetricSet, MetricUnits};
use thermavar::stats::SessionRecord;
use thermavar::{Error, Result};

/// Run manifest: the resolved configuration and file lists that reproduce a
/// run byte-exactly. No timestamps, no environment state.
#[derive(Debug, Serialize)]
pub struct Manifest<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: T,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl<T: Serialize> Manifest<T> {
    pub fn new(command: &'static str, config: T) -> Self {
        Self {
            tool: "thermavar",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    /// Outputs are recorded by file name (relative to the run's output
    /// directory) so identical runs into different directories produce
    /// byte-identical manifests.
    pub fn output(&mut self, path: &Path) {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.outputs.push(name);
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        atomic_write(&dir.join("manifest.json"), json.as_bytes())
    }
}

/// Creates the output directory if needed.
pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::IoFailure {
        path: dir.to_path_buf(),
        source: e,
    })
}

/// Writes via a temp file in the same directory plus rename, so readers never
/// observe a half-written file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = temp_sibling(path);
    std::fs::write(&tmp, bytes).map_err(|e| Error::IoFailure {
        path: tmp.clone(),
        source: e,
    })?;
    std::fs::rename(&tmp, path).map_err(|e| Error::IoFailure {
        path: path.to_path_buf(),
        source: e,
    })
}

fn temp_sibling(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

/// One session's results on disk: a [`SessionRecord`] with the units block
/// and the signal quality index alongside.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionFile {
    pub participant_id: String,
    pub session_label: String,
    pub metrics: MetricSet,
    pub units: MetricUnits,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psqi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_report: Option<f64>,
}

impl SessionFile {
    pub fn to_record(&self) -> SessionRecord {
        SessionRecord {
            participant_id: self.participant_id.clone(),
            session_label: self.session_label.clone(),
            metrics: self.metrics,
            self_report: self.self_report,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::IoFailure {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::BadCsv {
            path: path.to_path_buf(),
            reason: format!("not a session metrics file: {e}"),
        })
    }
}
