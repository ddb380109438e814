//! Temporal degradation benchmark engine.
//!
//! Corrupts image sequences with motion blur, sensor noise and compression,
//! drives a model under test through multi-turn questions while a closed-loop
//! calibrator adjusts severity, produces uncertainty-filtered pseudo-labels,
//! and scores hallucination, recovery and temporal consistency.

pub mod calibrate;
pub mod degrade;
pub mod error;
pub mod eval;
pub mod harness;
pub mod imaging;
pub mod seed;
pub mod tasks;
pub mod uir;

pub use error::{Error, Result};
