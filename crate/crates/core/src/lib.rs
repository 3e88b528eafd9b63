//! Nasal thermal variability pipeline.
//!
//! Reads radiometric frame sequences, tracks a nose-sized region of interest
//! on thermal-gradient maps, extracts and conditions the 1-D temperature
//! signal (sliding-window Tukey rejection, zero-phase low-pass, per-person
//! min-max normalization), evaluates the sixteen thermal-variability metrics
//! and the respiratory band-power quality index, and runs the repeated
//! measures comparison workflow over session cohorts. A deterministic
//! synthetic generator provides ground truth for all of it.
//!
//! With the default `parallel` feature the batch entry points (gradient
//! stacks, scene rendering, cohort generation) fan out over rayon; disabling
//! the feature gives bit-identical sequential behavior.

pub mod error;
pub mod frame;
pub mod metrics;
mod par;
pub mod pipeline;
pub mod special;
pub mod stats;
pub mod synth;
pub mod tracker;

pub use error::{Error, ErrorClass, Result};
