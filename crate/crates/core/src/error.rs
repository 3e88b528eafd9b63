//! Error types shared across the crate.
//!
//! Every failure mode is a distinct variant so that callers (in particular
//! the CLI) can map errors to exit classes without string matching.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse grouping of errors, used by the CLI to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// File access or file format problems.
    Io,
    /// ROI / seed / frame geometry problems.
    Geometry,
    /// Signals that are too short, constant, or otherwise degenerate.
    DegenerateSignal,
    /// Statistical input of the wrong shape.
    StatsShape,
}

#[derive(Debug, Error)]
pub enum Error {
    // ---- file io / format ----
    #[error("io failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("not an NHTF file and not a CSV bundle: {0}")]
    BadMagic(PathBuf),
    #[error("unsupported NHTF version {0}")]
    UnsupportedVersion(u16),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("timestamps not strictly increasing at frame {frame}: {prev} then {next}")]
    NonMonotonicTime { frame: usize, prev: f64, next: f64 },
    #[error("temperature {value} at frame {frame} outside plausible range [{lo}, {hi}] degC")]
    OutOfRangeTemp {
        frame: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
    #[error("malformed CSV in {path}: {reason}")]
    BadCsv { path: PathBuf, reason: String },

    // ---- geometry ----
    #[error("seed point ({x}, {y}) outside frame {width}x{height}")]
    SeedOutOfBounds {
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },
    #[error("invalid ROI: {0}")]
    InvalidRoi(String),
    #[error("ROI covers no pixels after clamping")]
    EmptyRoi,
    #[error("sequence has no frames")]
    EmptySequence,

    // ---- signal processing ----
    #[error("signal too short: {got} samples, need at least {need}")]
    TooShort { got: usize, need: usize },
    #[error("every sample flagged as an outlier")]
    AllOutliers,
    #[error("sample rate {rate} Hz too low (need > {need} Hz)")]
    RateTooLow { rate: f64, need: f64 },
    #[error("constant signal: min == max, min-max normalization undefined")]
    ConstantSignal,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    // ---- statistics ----
    #[error("constant series: correlation undefined")]
    ConstantSeries,
    #[error("incomplete table: {0}")]
    IncompleteTable(String),
    #[error("degenerate variance: within-subject error sum of squares is zero")]
    DegenerateVariance,
    #[error("zero variance in paired differences")]
    ZeroVariance,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            IoFailure { .. } | BadMagic(_) | UnsupportedVersion(_) | DimensionMismatch(_)
            | NonMonotonicTime { .. } | OutOfRangeTemp { .. } | InvalidSequence(_)
            | BadCsv { .. } | InvalidSpec(_) => ErrorClass::Io,
            SeedOutOfBounds { .. } | InvalidRoi(_) | EmptyRoi | EmptySequence => {
                ErrorClass::Geometry
            }
            TooShort { .. } | AllOutliers | RateTooLow { .. } | ConstantSignal
            | LengthMismatch { .. } | InvalidSignal(_) => ErrorClass::DegenerateSignal,
            ConstantSeries | IncompleteTable(_) | DegenerateVariance | ZeroVariance => {
                ErrorClass::StatsShape
            }
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::IoFailure {
            path: path.into(),
            source,
        }
    }
}
