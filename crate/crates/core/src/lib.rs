//! Echo-side integrated sensing and communication.
//!
//! A radar chirp reflects off a programmable surface that impresses
//! continuous-phase modulation on the echo. After dechirping, the receiver sees
//! a beat tone whose frequency carries the range and whose phase carries data.
//! This crate simulates that observation and implements the bounds,
//! estimators, detectors and demodulators used to analyze the link.

pub mod bounds;
pub mod chain;
pub mod demod;
pub mod estimation;
pub mod harness;
pub mod error;
pub mod rng;
pub mod signal;
pub mod sync;

pub use error::{Error, Result};
