// Copyright 2026 The loadprof Authors
// SPDX-License-Identifier: Apache-2.0

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use loadprof_bench::{fleet, readings_bytes, synth_config};
use loadprof_core::calendar::{aggregate_gross, select_peak_hours};
use loadprof_core::config::RunConfig;
use loadprof_core::ingest::ingest_readings;
use loadprof_core::report::Pipeline;
use loadprof_core::stats::{pooled_accumulator, pooled_observations};
use loadprof_core::synth::generate_fleet;
use loadprof_core::welch::{resampling_protocol, student_t_p, ResamplingConfig};
use loadprof_core::CalendarYear;

fn ingest(c: &mut Criterion) {
    let data = fleet(200);
    let bytes = readings_bytes(&data);
    let mut g = c.benchmark_group("ingest");
    g.throughput(Throughput::Bytes(bytes.len() as u64));
    g.sample_size(10);
    g.bench_function("parse_and_clean_200_households", |b| {
        b.iter(|| ingest_readings(black_box(bytes.as_slice()), data.hours, "bench").unwrap())
    });
    g.finish();
}

fn accumulate(c: &mut Criterion) {
    let data = fleet(1000);
    let gross = aggregate_gross(&data.profiles, data.hours).unwrap();
    let cal = select_peak_hours(&gross, 0.2, CalendarYear::new(data.hours)).unwrap();
    let refs: Vec<_> = data.profiles.iter().collect();
    let mut g = c.benchmark_group("stats");
    g.throughput(Throughput::Elements((refs.len() * cal.hours.len()) as u64));
    g.bench_function("pooled_accumulator_top20", |b| b.iter(|| pooled_accumulator(black_box(&refs), &cal)));
    g.bench_function("gross_aggregate", |b| b.iter(|| aggregate_gross(black_box(&data.profiles), data.hours).unwrap()));
    g.finish();

    c.bench_function("select_peak_hours_8760", |b| {
        b.iter(|| select_peak_hours(black_box(&gross), 0.2, CalendarYear::new(8760)).unwrap())
    });
}

fn welch(c: &mut Criterion) {
    c.bench_function("student_t_p_grid", |b| {
        b.iter(|| {
            let mut s = 0.0;
            for dof in [1.0, 5.0, 30.0, 1000.0] {
                for i in 0..20 {
                    s += student_t_p(black_box(f64::from(i) * 0.5), dof).unwrap();
                }
            }
            s
        })
    });
    let data = fleet(1000);
    let gross = aggregate_gross(&data.profiles, data.hours).unwrap();
    let cal = select_peak_hours(&gross, 0.2, CalendarYear::new(data.hours)).unwrap();
    let run = RunConfig::default();
    let obs = |code| pooled_observations(&data.category_profiles(&code), &cal);
    let (a, b_obs) = (obs(run.base_category), obs(run.hp_category));
    let cfg = ResamplingConfig { seed: 7, ..ResamplingConfig::default() };
    let mut g = c.benchmark_group("welch");
    g.sample_size(10);
    g.bench_function("resampling_50_reps", |b| {
        b.iter(|| resampling_protocol(black_box(&a), &b_obs, 5000, 635, &cfg).unwrap())
    });
    g.finish();
}

fn synth(c: &mut Criterion) {
    let cfg = synth_config(100);
    let mut g = c.benchmark_group("synth");
    g.sample_size(10);
    g.throughput(Throughput::Elements((cfg.total_households() * cfg.hours) as u64));
    g.bench_function("generate_100_households", |b| b.iter(|| generate_fleet(black_box(&cfg)).unwrap()));
    g.finish();
}

fn stages(c: &mut Criterion) {
    let data = fleet(600);
    let run = RunConfig::default();
    let mut g = c.benchmark_group("report");
    g.sample_size(10);
    g.bench_function("ldc_scenarios_600_households", |b| {
        b.iter_batched(
            || Pipeline::new(&run, &data, None).unwrap(),
            |p| p.ldc().unwrap(),
            BatchSize::LargeInput,
        )
    });
    g.finish();
}

criterion_group!(benches, ingest, accumulate, welch, synth, stages);
criterion_main!(benches);
