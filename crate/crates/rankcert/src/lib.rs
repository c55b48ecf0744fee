//! Composite indices from expert-survey ratings, reliability diagnostics,
//! and bootstrap confidence sets for country rankings.
//!
//! The crate is organized around the pipeline it implements:
//!
//! * [`nes_data`] — parse and validate expert micro-data and pre-aggregated
//!   country summaries, plus the built-in 54-country reference table.
//! * [`index`] — expert-level and country-level composite scores, scale
//!   remapping, and point rankings.
//! * [`reliability`] — Cronbach's alpha, one-way random-effects ICC, the
//!   duplication robustness check, and expert-type contrasts.
//! * [`rank_inference`] — simultaneous confidence sets for country ranks via
//!   a studentized max-statistic bootstrap, plus sample-size projections.
//! * [`trend`] — longitudinal per-country series with significance flags and
//!   cross-index correlation.
//! * [`report`] — deterministic SVG charts and CSV tables.
//! * [`cli`] — the `rankcert` command-line front end.

pub mod cli;
pub mod error;
pub mod index;
pub mod nes_data;
pub mod rank_inference;
pub mod reliability;
pub mod report;
pub mod stats;
pub mod trend;

pub use error::{Error, Result};
