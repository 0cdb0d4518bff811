// Copyright 2026 The loadprof Authors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Run with `cargo test -p loadprof-core --test acceptance`.

mod support;

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::time::Instant;

use loadprof_core::bands::{day_bands, hour_band, BAND_LEVELS};
use loadprof_core::calendar::{aggregate_gross, peak_hour_count, select_peak_hours};
use loadprof_core::coincidence::exceedance_series;
use loadprof_core::config::RunConfig;
use loadprof_core::dataset::load_dataset;
use loadprof_core::ingest::write_readings;
use loadprof_core::ldc::{build_ldc, extrapolate_adoption};
use loadprof_core::report::{build_report, with_workers};
use loadprof_core::stats::pooled_accumulator;
use loadprof_core::synth::{calibration_report, generate_fleet, SynthConfig};
use loadprof_core::taxonomy::write_attributes;
use loadprof_core::welch::{resampling_protocol, student_t_p, welch_t, Replacement, ResamplingConfig, SampleSummary};
use loadprof_core::{reference, AdoptionScenario, CalendarYear, CleanProfile, GrossSeries, Kwh, StreamAccumulator};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn streaming_vs_naive() -> Check {
    let start = Instant::now();
    let mut rng = support::rng(1);
    let hours = 8760;
    let profiles: Vec<CleanProfile> = (0..1000)
        .map(|i| support::random_profile(&mut rng, i, hours, 0.02))
        .collect();
    let mut worst = 0.0f64;
    let mut pooled = StreamAccumulator::new();
    let mut pooled_values = Vec::new();
    for p in &profiles {
        let values: Vec<f64> = p.values.iter().flatten().map(|r| r.as_f64()).collect();
        let whole: StreamAccumulator = p.values.iter().flatten().map(|r| r.kwh()).collect();
        // random shard assignment, merged in random order
        let shards = rng.random_range(1..=8);
        let mut parts = vec![StreamAccumulator::new(); shards];
        for r in p.values.iter().flatten() {
            parts[rng.random_range(0..shards)].push_reading(*r);
        }
        parts.shuffle(&mut rng);
        let merged = parts.into_iter().fold(StreamAccumulator::new(), StreamAccumulator::merge);
        ensure(merged == whole, || format!("{}: shard state differs", p.meter_id))?;
        let (mean, std) = support::two_pass(&values).ok_or("empty profile")?;
        worst = worst
            .max(rel_err(merged.mean().unwrap(), mean))
            .max(rel_err(merged.std_dev().unwrap(), std));
        pooled = pooled.merge(merged);
        pooled_values.extend(values);
    }
    let (mean, std) = support::two_pass(&pooled_values).unwrap();
    worst = worst
        .max(rel_err(pooled.mean().unwrap(), mean))
        .max(rel_err(pooled.std_dev().unwrap(), std));

    // category statistics over a peak calendar
    let gross = aggregate_gross(&profiles, hours).map_err(|e| e.to_string())?;
    let cal = select_peak_hours(&gross, 0.2, CalendarYear::new(hours)).map_err(|e| e.to_string())?;
    let refs: Vec<&CleanProfile> = profiles.iter().collect();
    let acc = pooled_accumulator(&refs, &cal);
    let obs: Vec<f64> = profiles
        .iter()
        .flat_map(|p| cal.hours.iter().filter_map(|&h| p.values[h]).map(|r| r.as_f64()))
        .collect();
    ensure(acc.count as usize == obs.len(), || "peak observation count differs".into())?;
    let (mean, std) = support::two_pass(&obs).unwrap();
    worst = worst
        .max(rel_err(acc.mean().unwrap(), mean))
        .max(rel_err(acc.std_dev().unwrap(), std));

    let elapsed = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-9, || format!("relative error {worst:.2e} > 1e-9"))?;
    ensure(elapsed < 10.0, || format!("took {elapsed:.1} s"))?;
    Ok(format!("max rel err {worst:.1e}, shard states identical, {elapsed:.2} s"))
}

fn welch_kernel() -> Check {
    let mut worst = 0.0f64;
    for dof in [1.0, 2.0, 5.0, 10.0, 30.0, 100.0, 1000.0] {
        for i in 0..=20 {
            let t = f64::from(i) * 0.5;
            let p = student_t_p(t, dof).map_err(|e| e.to_string())?;
            let q = support::t_tail_quadrature(t, dof);
            worst = worst.max((p - q).abs());
            if i == 0 {
                ensure(p == 1.0, || format!("p(0, {dof}) = {p}"))?;
            }
        }
    }
    ensure(worst <= 1e-8, || format!("max |p − oracle| = {worst:.2e}"))?;
    let s = SampleSummary::new(40, 1.3, 0.7).map_err(|e| e.to_string())?;
    let out = welch_t(&s, &s, 0.05).map_err(|e| e.to_string())?;
    ensure(out.t == 0.0 && out.p_two_sided == 1.0, || format!("equal summaries: t = {}", out.t))?;
    Ok(format!("max |p − quadrature| = {worst:.1e} over 147 grid points"))
}

fn resampling() -> Check {
    let mut rng = support::rng(3);
    let normal: Normal<f64> = Normal::new(1.1, 0.6).unwrap();
    let pool: Vec<f64> = (0..500).map(|_| normal.sample(&mut rng).max(0.001)).collect();
    let cfg = ResamplingConfig {
        repetitions: 50,
        alpha: 0.05,
        seed: 11,
        replacement: Replacement::With,
    };
    let run = |a: &[f64], b: &[f64], na, nb, workers| {
        with_workers(Some(workers), || resampling_protocol(a, b, na, nb, &cfg))
            .map_err(|e| e.to_string())?
            .map_err(|e| e.to_string())
    };
    let same = run(&pool, &pool, 500, 500, 1)?;
    ensure(same.acceptance_rate >= 0.85, || format!("identical: acceptance {}", same.acceptance_rate))?;
    ensure(run(&pool, &pool, 500, 500, 4)? == same, || "identical: worker count changes report".into())?;

    // HP-like shift of one pooled standard deviation
    let base: Vec<f64> = (0..20_000).map(|_| normal.sample(&mut rng)).collect();
    let shifted: Vec<f64> = (0..20_000).map(|_| normal.sample(&mut rng) + 0.6).collect();
    let apart = run(&base, &shifted, 5000, 635, 4)?;
    ensure(apart.acceptance_rate == 0.0, || format!("shifted: acceptance {}", apart.acceptance_rate))?;
    ensure(run(&base, &shifted, 5000, 635, 1)? == apart, || "shifted: worker count changes report".into())?;
    ensure(run(&base, &shifted, 5000, 635, 4)? == apart, || "shifted: rerun differs".into())?;
    Ok(format!(
        "identical {:.2}, shifted {:.2}, reruns and 1/4 workers identical",
        same.acceptance_rate, apart.acceptance_rate
    ))
}

fn peak_calendar() -> Check {
    let hours = 8760;
    let calendar = CalendarYear::new(hours);
    let mut rng = support::rng(4);
    for series in 0..100 {
        // alternate coarse (many ties) and fine series
        let levels = if series % 2 == 0 { 50 } else { 1_000_000 };
        let gross = GrossSeries::external(support::random_series(&mut rng, hours, levels)).unwrap();
        let mut previous: Option<BTreeSet<usize>> = None;
        for (f, expected) in [(0.2, 1752), (0.05, 438), (0.01, 87)] {
            let cal = select_peak_hours(&gross, f, calendar).map_err(|e| e.to_string())?;
            ensure(cal.hours.len() == expected, || format!("{f}: {} hours", cal.hours.len()))?;
            ensure(cal.monthly_counts.iter().sum::<usize>() == expected, || "monthly sum".into())?;
            let selected: BTreeSet<usize> = cal.hours.iter().copied().collect();
            if let Some(prev) = &previous {
                ensure(selected.is_subset(prev), || format!("top {f} not nested"))?;
            }
            let v = |h: usize| gross.values[h];
            let min_sel = selected.iter().map(|&h| v(h)).min().unwrap();
            let unselected = (0..hours).filter(|h| !selected.contains(h));
            for h in unselected {
                ensure(v(h) <= min_sel, || format!("hour {h} above the selection"))?;
                // ties at the boundary go to earlier hours
                if v(h) == min_sel {
                    ensure(selected.iter().all(|&s| v(s) > min_sel || s < h), || {
                        format!("tie at hour {h} broken towards a later hour")
                    })?;
                }
            }
            previous = Some(selected);
        }
    }
    // quadratic rank-count oracle on short series
    for _ in 0..100 {
        let n = 300;
        let values = support::random_series(&mut rng, n, 20);
        let gross = GrossSeries::external(values.clone()).unwrap();
        let cal = select_peak_hours(&gross, 0.2, CalendarYear::new(n))
            .map_err(|e| e.to_string())?;
        let k = peak_hour_count(0.2, n);
        let oracle: Vec<usize> = (0..n)
            .filter(|&h| {
                let ahead = (0..n)
                    .filter(|&o| values[o] > values[h] || (values[o] == values[h] && o < h))
                    .count();
                ahead < k
            })
            .collect();
        ensure(cal.hours == oracle, || "selection differs from rank-count oracle".into())?;
    }
    Ok("1752/438/87, nested, monthly sums, boundary on 100 series, rank oracle".into())
}

fn ldc_extrapolation() -> Check {
    let mut rng = support::rng(5);
    let hours = 8760;
    let base_code = "H_P3_A3_€3_EV0_HP0".parse().unwrap();
    let ev_code = "H_P3_A3_€3_EV1_HP0".parse().unwrap();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let base: Vec<Kwh> = (0..hours).map(|_| Kwh(rng.random_range(0..2_000_000))).collect();
        let adopter: Vec<Kwh> = (0..hours).map(|_| Kwh(rng.random_range(0..40_000))).collect();
        let gross: Vec<Kwh> = base.iter().map(|b| Kwh(b.0 + rng.random_range(0..50_000_000))).collect();
        let gross = GrossSeries::external(gross).unwrap();

        let n_base = rng.random_range(100..60_000u64);
        let identity = AdoptionScenario::new(base_code, base_code, n_base, n_base).map_err(|e| e.to_string())?;
        let same = extrapolate_adoption(&gross, &base, &base, &identity, 0.2).map_err(|e| e.to_string())?;
        for h in 0..hours {
            ensure(same.up_kwh(h).to_bits() == gross.values[h].as_f64().to_bits(), || {
                format!("identity differs at hour {h}")
            })?;
        }

        let n_adopter = rng.random_range(20..1000u64);
        let scenario = AdoptionScenario::new(base_code, ev_code, n_base, n_adopter).map_err(|e| e.to_string())?;
        let up = extrapolate_adoption(&gross, &base, &adopter, &scenario, 0.2).map_err(|e| e.to_string())?;
        let total_up: f64 = (0..hours).map(|h| up.up_kwh(h)).sum();
        let sum = |v: &[Kwh]| v.iter().map(|k| k.as_f64()).sum::<f64>();
        let expected = sum(&gross.values) - sum(&base) + scenario.ratio() * sum(&adopter);
        worst = worst.max(rel_err(total_up, expected));
    }
    ensure(worst <= 1e-6, || format!("conservation rel err {worst:.2e}"))?;

    for _ in 0..1000 {
        let n = rng.random_range(1..2000);
        let levels = rng.random_range(2..10_000);
        let series = support::random_series(&mut rng, n, levels);
        let ldc = build_ldc(&series, "random");
        ensure(ldc.scaled.windows(2).all(|w| w[0] >= w[1]), || "LDC increases".into())?;
        let total: i128 = series.iter().map(|k| i128::from(k.0)).sum();
        ensure(ldc.scaled.iter().sum::<i128>() == total, || "LDC changes the sum".into())?;
    }
    Ok(format!("identity bit-exact, conservation rel err {worst:.1e}, 1000 LDCs sorted and sum-preserving"))
}

fn check_coincidence(profiles: &[&CleanProfile], label: &str) -> Result<(), String> {
    let code = "H_P3_A3_€3_EV1_HP0".parse().unwrap();
    let s3 = exceedance_series(profiles, code, Kwh(3000)).map_err(|e| e.to_string())?;
    let s4 = exceedance_series(profiles, code, Kwh(4000)).map_err(|e| e.to_string())?;
    for (series, t) in [(&s3, 3000u32), (&s4, 4000)] {
        for h in 0..series.hours() {
            let (mut above, mut present) = (0u32, 0u32);
            for p in profiles {
                if let Some(r) = p.values[h] {
                    present += 1;
                    above += u32::from(r.millis() > t);
                }
            }
            ensure(series.exceed[h] == above && series.denominators[h] == present, || {
                format!("{label}: counts differ at hour {h}")
            })?;
            let exact = (present > 0).then(|| f64::from(above) / f64::from(present));
            ensure(series.probability(h) == exact, || format!("{label}: probability at hour {h}"))?;
        }
    }
    for h in 0..s3.hours() {
        ensure(s4.probability(h) <= s3.probability(h), || format!("{label}: 4 kWh above 3 kWh at {h}"))?;
    }
    Ok(())
}

fn coincidence(fleet: &loadprof_core::Dataset) -> Check {
    let mut rng = support::rng(6);
    for fleet_no in 0..20 {
        let n = rng.random_range(1..150);
        let hours = 24 * 60;
        let profiles: Vec<CleanProfile> = (0..n)
            .map(|i| {
                let mut p = support::random_profile(&mut rng, i, hours, 0.05);
                // exact threshold values exercise the strict comparison
                for h in (0..hours).step_by(17) {
                    p.values[h] = loadprof_core::kwh::Reading::new(Kwh(if h % 2 == 0 { 3000 } else { 4000 }));
                }
                p
            })
            .collect();
        let refs: Vec<&CleanProfile> = profiles.iter().collect();
        check_coincidence(&refs, &format!("fleet {fleet_no}"))?;
    }
    let ev = RunConfig::default().ev_category;
    let synthetic = fleet.category_profiles(&ev);
    ensure(!synthetic.is_empty(), || "synthetic EV category empty".into())?;
    check_coincidence(&synthetic, "synthetic EV")?;
    Ok("brute-force counts equal on 21 fleets, 4 kWh ≤ 3 kWh pointwise".into())
}

fn quantile_bands(fleet: &loadprof_core::Dataset) -> Check {
    let mut rng = support::rng(7);
    for n in 1..=1000 {
        let range = if n % 3 == 0 { 20 } else { 30_000 };
        let mut sample: Vec<u32> = (0..n).map(|_| rng.random_range(1..=range)).collect();
        sample.sort();
        let band = hour_band(&sample).ok_or("empty band")?;
        for (i, &level) in BAND_LEVELS.iter().enumerate() {
            let oracle = f64::from(support::nearest_rank_oracle(&sample, level)) / 1000.0;
            ensure(band.quantiles[i] == oracle, || format!("n = {n}, q{level}"))?;
        }
        ensure(band.median == f64::from(support::nearest_rank_oracle(&sample, 50)) / 1000.0, || {
            format!("n = {n}, median")
        })?;
    }
    let mut checked = 0;
    for (code, profiles) in fleet.by_category() {
        for day in [0, 4, 100, 200, 364] {
            let bands = day_bands(&profiles, code, day).map_err(|e| e.to_string())?;
            for (clock, hour) in bands.hours.iter().enumerate() {
                let hour = hour.as_ref().ok_or("hour without data")?;
                ensure(hour.quantiles.windows(2).all(|w| w[0] <= w[1]), || {
                    format!("{code} day {day} hour {clock}: bands cross")
                })?;
                checked += 1;
            }
        }
    }
    Ok(format!("sort oracle exact for n = 1..1000, {checked} category-hours monotone"))
}

fn paper_signatures(fleet: &loadprof_core::Dataset) -> Check {
    let cfg = RunConfig::default();
    let report = calibration_report(fleet, cfg.band_day).map_err(|e| e.to_string())?;
    let ev: Vec<_> = report.ev_evening.iter().filter(|e| e.category == cfg.ev_category).collect();
    ensure(!ev.is_empty(), || "no EV evening hours".into())?;
    for e in &ev {
        ensure(e.mean > e.median && e.third_moment.is_some_and(|m| m > 0.0), || {
            format!("EV hour {}: mean {:.3}, median {:.3}", e.hour, e.mean, e.median)
        })?;
    }
    let hp = report
        .hp_symmetry
        .iter()
        .find(|h| h.category == cfg.hp_category)
        .ok_or("HP category missing")?;
    ensure(hp.max_gap_ratio <= 0.1, || {
        format!("HP |mean − median| / std = {:.3} at hour {}", hp.max_gap_ratio, hp.worst_hour)
    })?;

    let gross = aggregate_gross(&fleet.profiles, fleet.hours).map_err(|e| e.to_string())?;
    let cal = select_peak_hours(&gross, 0.2, CalendarYear::new(fleet.hours)).map_err(|e| e.to_string())?;
    let mean = |code| pooled_accumulator(&fleet.category_profiles(&code), &cal).mean().unwrap_or(0.0);
    let (hp_mean, ev_mean) = (mean(cfg.hp_category), mean(cfg.ev_category));
    ensure(hp_mean > ev_mean, || format!("top-20% HP {hp_mean:.3} ≤ EV {ev_mean:.3}"))?;

    let base = cfg.ev_category.with_ev(false);
    let baseline = exceedance_series(&fleet.category_profiles(&base), base, Kwh(3000))
        .map_err(|e| e.to_string())?
        .year_average()
        .ok_or("no baseline data")?;
    ensure(baseline <= 0.01, || format!("non-EV 3 kWh exceedance {baseline:.4}"))?;
    Ok(format!(
        "EV evening skewed, HP gap ratio {:.3}, top-20% HP {hp_mean:.2} > EV {ev_mean:.2}, non-EV exceedance {:.2}%",
        hp.max_gap_ratio,
        baseline * 100.0
    ))
}

fn peak_memory_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn performance() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let readings = dir.path().join("readings.csv");
    let attributes = dir.path().join("attributes.csv");
    let synth = SynthConfig::default().scaled_to(10_000);
    {
        let fleet = generate_fleet(&synth).map_err(|e| e.to_string())?;
        let mut out = BufWriter::new(File::create(&readings).map_err(|e| e.to_string())?);
        write_readings(&mut out, &fleet.profiles).map_err(|e| e.to_string())?;
        out.flush().map_err(|e| e.to_string())?;
        let out = BufWriter::new(File::create(&attributes).map_err(|e| e.to_string())?);
        write_attributes(out, &fleet.attributes).map_err(|e| e.to_string())?;
    }
    let cfg = RunConfig::default();
    let run = |workers| -> Result<(loadprof_core::report::ReportFiles, f64), String> {
        let start = Instant::now();
        let files = with_workers(Some(workers), || -> loadprof_core::Result<_> {
            let (dataset, outcome) = load_dataset(&readings, &attributes, cfg.hours, &cfg.scheme)?;
            build_report(&cfg, &dataset, &outcome.report, None)
        })
        .and_then(|r| r)
        .map_err(|e| e.to_string())?;
        Ok((files, start.elapsed().as_secs_f64()))
    };
    let (four, t4) = run(4)?;
    let (one, t1) = run(1)?;
    let peak = peak_memory_bytes();
    ensure(one == four, || {
        let differing: Vec<&String> = four.files.keys().filter(|k| one.files.get(*k) != four.files.get(*k)).collect();
        format!("1 and 4 workers differ in {differing:?}")
    })?;
    ensure(t4 <= 120.0, || format!("report took {t4:.1} s with 4 workers"))?;
    let gb = peak.map(|b| b as f64 / 1e9);
    if let Some(gb) = gb {
        ensure(gb <= 2.0, || format!("peak memory {gb:.2} GB"))?;
    }
    Ok(format!(
        "10,000 households: {t4:.1} s (4 workers), {t1:.1} s (1 worker), peak {}, {} files identical",
        gb.map_or("unknown".to_string(), |g| format!("{g:.2} GB")),
        four.files.len()
    ))
}

fn fixture_integrity() -> Check {
    reference::validate_all().map_err(|e| e.to_string())?;
    let months = reference::peak_hours_by_month().map_err(|e| e.to_string())?;
    let total: usize = months.iter().sum();
    ensure(total == reference::PUBLISHED_PEAK_TOTAL && peak_hour_count(0.2, 8760) == 1752, || {
        format!("monthly total {total}")
    })?;
    let pivot = reference::annual_means().map_err(|e| e.to_string())?.to_pivot_csv();
    ensure(pivot == reference::ANNUAL_MEANS_CSV, || "annual means pivot does not round-trip".into())?;
    let table = reference::resampling_table().map_err(|e| e.to_string())?;
    let cats = reference::focus_categories().map_err(|e| e.to_string())?;
    Ok(format!(
        "5 tables valid ({} categories, {} resampling rows); monthly total {total} vs 1752 selected",
        cats.len(),
        table.len()
    ))
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |n: usize| filter.is_empty() || filter.iter().any(|f| f == &n.to_string());

    let fleet = {
        let cfg = SynthConfig::default();
        generate_fleet(&cfg)
            .and_then(|f| f.into_dataset(&RunConfig::default().scheme))
            .expect("default synthetic fleet")
    };

    let criteria: Vec<(usize, &str, Box<dyn Fn() -> Check + '_>)> = vec![
        (1, "streaming accumulators vs two-pass", Box::new(streaming_vs_naive)),
        (2, "Welch kernel vs quadrature", Box::new(welch_kernel)),
        (3, "resampling protocol", Box::new(resampling)),
        (4, "peak calendar", Box::new(peak_calendar)),
        (5, "LDC extrapolation", Box::new(ldc_extrapolation)),
        (6, "coincidence exactness", Box::new(|| coincidence(&fleet))),
        (7, "quantile bands", Box::new(|| quantile_bands(&fleet))),
        (8, "qualitative signatures", Box::new(|| paper_signatures(&fleet))),
        (9, "performance and worker invariance", Box::new(performance)),
        (10, "fixture integrity", Box::new(fixture_integrity)),
    ];
    let mut failed = 0;
    for (n, name, check) in criteria {
        if !wanted(n) {
            continue;
        }
        match check() {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
