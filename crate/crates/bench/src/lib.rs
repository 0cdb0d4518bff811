// Copyright 2026 The loadprof Authors
// SPDX-License-Identifier: Apache-2.0

//! Inputs shared by the benchmarks.

use loadprof_core::ingest::write_readings;
use loadprof_core::synth::{generate_fleet, SynthConfig};
use loadprof_core::Dataset;

/// Default synthetic fleet rescaled to `households`, as a dataset.
pub fn fleet(households: usize) -> Dataset {
    let cfg = synth_config(households);
    generate_fleet(&cfg)
        .and_then(|f| f.into_dataset(&cfg.scheme))
        .expect("synthetic fleet")
}

pub fn synth_config(households: usize) -> SynthConfig {
    SynthConfig::default().scaled_to(households)
}

/// The dataset's profiles in the readings file format.
pub fn readings_bytes(dataset: &Dataset) -> Vec<u8> {
    let mut out = Vec::new();
    write_readings(&mut out, &dataset.profiles).expect("in-memory write");
    out
}
