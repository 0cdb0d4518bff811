// Copyright 2026 The loadprof Authors
// SPDX-License-Identifier: Apache-2.0

use std::io::BufReader;

use loadprof_core::calendar::{read_gross, write_gross};
use loadprof_core::config::{ConfigFile, RunConfig};
use loadprof_core::dataset::load_dataset;
use loadprof_core::ingest::{ingest_readings, write_readings};
use loadprof_core::report::{build_report, with_workers, Pipeline};
use loadprof_core::synth::{generate_fleet, SynthConfig};
use loadprof_core::taxonomy::{read_attributes, write_attributes};
use loadprof_core::{Dataset, Error};

fn small_fleet(seed: u64) -> SynthConfig {
    SynthConfig {
        seed,
        ..SynthConfig::default().scaled_to(1200)
    }
}

#[test]
fn synthetic_files_round_trip_through_ingest() {
    let fleet = generate_fleet(&SynthConfig {
        hours: 8760,
        ..small_fleet(3).scaled_to(150)
    })
    .unwrap();
    let mut readings = Vec::new();
    write_readings(&mut readings, &fleet.profiles).unwrap();
    let outcome = ingest_readings(readings.as_slice(), 8760, "readings").unwrap();
    assert_eq!(outcome.profiles, fleet.profiles);
    assert!(outcome.diagnostics.is_empty());

    let mut attrs = Vec::new();
    write_attributes(&mut attrs, &fleet.attributes).unwrap();
    assert_eq!(read_attributes(BufReader::new(attrs.as_slice()), "attributes").unwrap(), fleet.attributes);
}

#[test]
fn report_is_deterministic_and_worker_independent() {
    let cfg = RunConfig::default();
    let fleet = generate_fleet(&small_fleet(7)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let readings = dir.path().join("readings.csv");
    let attributes = dir.path().join("attributes.csv");
    write_readings(std::fs::File::create(&readings).unwrap(), &fleet.profiles).unwrap();
    write_attributes(std::fs::File::create(&attributes).unwrap(), &fleet.attributes).unwrap();
    let run = |workers| {
        with_workers(Some(workers), || {
            let (dataset, outcome) = load_dataset(&readings, &attributes, cfg.hours, &cfg.scheme)?;
            build_report(&cfg, &dataset, &outcome.report, None)
        })
        .unwrap()
        .unwrap()
    };
    let one = run(1);
    let three = run(3);
    assert_eq!(one, three);
    for name in [
        "gross.csv",
        "peaks/calendar_y20.json",
        "stats/peak_stats.csv",
        "stats/annual_means_pivot.csv",
        "welch/welch.csv",
        "coincidence/H_P3_A3_EUR3_EV1_HP0.csv",
        "ldc/ev_ldc.csv",
        "ldc/hp_stats.json",
        "ldc/comparison.json",
        "calibration.json",
        "summary.json",
    ] {
        assert!(one.get(name).is_some(), "missing {name}");
    }
    let tmp = dir.path().to_string_lossy().into_owned();
    for (name, body) in &one.files {
        let text = String::from_utf8_lossy(body);
        assert!(!text.contains(&tmp), "{name} leaks an absolute path");
    }
    let summary: serde_json::Value = serde_json::from_str(one.text("summary.json").unwrap()).unwrap();
    assert_eq!(summary["notes"].as_array().unwrap().len(), 0, "{summary}");
    let welch = one.text("welch/welch.csv").unwrap();
    assert_eq!(welch.lines().count(), 10);

    // the gross file reads back to the series the calendars used
    let gross = read_gross(one.get("gross.csv").unwrap(), cfg.hours, "gross").unwrap();
    let mut again = Vec::new();
    write_gross(&mut again, &gross).unwrap();
    assert_eq!(again, one.get("gross.csv").unwrap());
}

fn dataset(cfg: &SynthConfig, run: &RunConfig) -> Dataset {
    generate_fleet(cfg).unwrap().into_dataset(&run.scheme).unwrap()
}

#[test]
fn missing_categories_are_skipped_with_a_note() {
    let mut run = RunConfig::default();
    let mut synth = small_fleet(5);
    synth.categories.retain(|(c, _)| !c.ev);
    let data = dataset(&synth, &run);
    let files = build_report(&run, &data, &Default::default(), None).unwrap();
    assert!(files.get("ldc/ev_ldc.csv").is_none());
    let summary = files.text("summary.json").unwrap();
    assert!(summary.contains("welch skipped"), "{summary}");
    assert!(summary.contains("ldc skipped"));

    // a single stage reports the missing category as a domain error
    run.band_categories = vec![run.ev_category];
    let pipeline = Pipeline::new(&run, &data, None).unwrap();
    assert!(matches!(pipeline.bands(), Err(Error::Domain(_))));
    assert!(matches!(pipeline.coincidence(), Err(Error::Domain(_))));
}

#[test]
fn config_file_drives_synth_and_run() {
    let text = "\
# small demo
hours = 8760
seed = 11
peak_fractions = 0.2, 0.05
households_total = 600
ev_category = H_P3_A3_€3_EV1_HP0
";
    let file = ConfigFile::from_key_values(&loadprof_core::config::KeyValues::parse(text, "demo.cfg").unwrap(), std::path::Path::new("."))
        .unwrap();
    assert_eq!(file.run.seed, 11);
    assert_eq!(file.synth.seed, 11);
    assert_eq!(file.run.peak_fractions, vec![0.2, 0.05]);
    assert_eq!(file.synth.total_households(), 600);
}
