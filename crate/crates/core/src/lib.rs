// Copyright 2026 The loadprof Authors
// SPDX-License-Identifier: Apache-2.0

//! Analytics for residential smart-meter load profiles.
//!
//! The pipeline turns raw hourly readings into cleaned household profiles,
//! groups households into socio-techno-economic categories, and evaluates
//! their behaviour during system peak hours:
//!
//! * [`ingest`] parses readings and applies the cleaning rules.
//! * [`taxonomy`] assigns category codes and applies the privacy filter.
//! * [`calendar`] aggregates gross load and selects the top-fraction peak hours.
//! * [`stats`] computes streaming means and deviations over peak hours,
//!   annual means and per-household maxima.
//! * [`welch`] runs Welch's t-test and the repeated random-pick protocol.
//! * [`bands`] builds hourly quantile bands for a day.
//! * [`coincidence`] approximates EV coincidence by threshold exceedance.
//! * [`ldc`] builds load duration curves and adoption extrapolations.
//! * [`synth`] generates a deterministic synthetic fleet.
//! * [`report`] wires everything together and renders the output files.

pub mod bands;
pub mod calendar;
pub mod coincidence;
pub mod config;
pub mod dataset;
pub mod error;
pub mod ingest;
pub mod kwh;
pub mod ldc;
pub mod reference;
pub mod report;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod taxonomy;
pub mod welch;

pub use calendar::{CalendarYear, GrossSeries, PeakCalendar};
pub use dataset::Dataset;
pub use error::{Error, Result};
pub use ingest::{CleanProfile, CleaningReport};
pub use kwh::Kwh;
pub use ldc::{AdoptionScenario, ExtrapolationResult, LoadDurationCurve};
pub use stats::StreamAccumulator;
pub use taxonomy::{CategoryCode, CategoryScheme, CategoryTable, HouseholdAttributes};
