// Copyright 2026 The loadprof Authors
// SPDX-License-Identifier: Apache-2.0

//! `loadprof`: smart-meter load profile analysis from the command line.
//!
//! Exit status: 0 success, 1 usage or configuration error, 2 input format
//! or I/O error, 3 domain error (e.g. an empty category).

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use loadprof_core::calendar::{aggregate_gross, read_gross, select_peak_hours};
use loadprof_core::config::{ConfigFile, KeyValues, RunConfig};
use loadprof_core::dataset::load_dataset;
use loadprof_core::ingest::{ingest_readings, write_readings};
use loadprof_core::report::{build_report, describe, Pipeline, ReportFiles};
use loadprof_core::synth::generate_fleet;
use loadprof_core::taxonomy::{apply_privacy_filter, build_category_table, read_attributes, write_attributes};
use loadprof_core::{CalendarYear, CleaningReport, Dataset, Error, GrossSeries, Result};

#[derive(Parser)]
#[command(name = "loadprof", version, about = "Residential load profile analytics")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "LOADPROF_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic fleet (readings.csv, attributes.csv).
    Synth {
        #[command(flatten)]
        opts: Options,
        /// Rescale the category counts to this many households.
        #[arg(long)]
        households: Option<usize>,
    },
    /// Clean a readings file (clean_readings.csv, cleaning_report.json).
    Ingest(Options),
    /// Classify households (categories.json).
    Categorize(Options),
    /// Select peak hours of the gross series (gross.csv, peaks/).
    Peaks(Options),
    /// Peak-hour and annual statistics (stats/).
    Stats(Options),
    /// Welch resampling comparisons (welch/welch.csv).
    Welch(Options),
    /// Hourly distribution bands of one day (bands/).
    Bands(Options),
    /// EV exceedance probabilities (coincidence/).
    Coincidence(Options),
    /// Load duration curves and adoption scenarios (ldc/).
    Ldc(Options),
    /// Run the whole pipeline and emit every artifact.
    Report(Options),
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Args, Default)]
struct Options {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: loadprof-out).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    readings: Option<PathBuf>,
    #[arg(long)]
    attributes: Option<PathBuf>,
    /// External gross series instead of the fleet aggregate.
    #[arg(long)]
    gross: Option<PathBuf>,
    #[arg(long)]
    hours: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Peak fraction; repeat for several levels.
    #[arg(long = "fraction")]
    fractions: Vec<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    repetitions: Option<usize>,
    /// `with` or `without`.
    #[arg(long)]
    replacement: Option<String>,
    /// `observations` or `household-means`.
    #[arg(long)]
    resample_unit: Option<String>,
    /// 0-based day of year for the bands.
    #[arg(long)]
    day: Option<usize>,
    /// Category code; repeat for several.
    #[arg(long = "category")]
    categories: Vec<String>,
    /// Exceedance threshold in kWh; repeat for several.
    #[arg(long = "threshold")]
    thresholds: Vec<String>,
    /// Peak window of the LDC statistics.
    #[arg(long)]
    window: Option<f64>,
    /// `kwh` or `mwh`.
    #[arg(long)]
    unit: Option<String>,
    #[arg(long)]
    privacy_k: Option<usize>,
}

impl Options {
    /// Flags rendered as configuration lines, so they share the file's
    /// parser and validation.
    fn as_config_text(&self) -> String {
        let mut lines = Vec::new();
        let mut push = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                lines.push(format!("{key} = {v}"));
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let join = |v: &[String]| (!v.is_empty()).then(|| v.join(", "));
        push("out_dir", path(&self.out));
        push("readings", path(&self.readings));
        push("attributes", path(&self.attributes));
        push("gross", path(&self.gross));
        push("hours", self.hours.map(|v| v.to_string()));
        push("seed", self.seed.map(|v| v.to_string()));
        let fractions: Vec<String> = self.fractions.iter().map(f64::to_string).collect();
        push("peak_fractions", join(&fractions));
        push("alpha", self.alpha.map(|v| v.to_string()));
        push("repetitions", self.repetitions.map(|v| v.to_string()));
        push("replacement", self.replacement.clone());
        push("resample_unit", self.resample_unit.clone());
        push("band_day", self.day.map(|v| v.to_string()));
        push("band_categories", join(&self.categories));
        push("thresholds_kwh", join(&self.thresholds));
        push("window_fraction", self.window.map(|v| v.to_string()));
        push("unit", self.unit.clone());
        push("privacy_k", self.privacy_k.map(|v| v.to_string()));
        lines.join("\n")
    }

    fn load(&self, extra: &str) -> Result<ConfigFile> {
        let mut cfg = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let text = format!("{}\n{extra}", self.as_config_text());
        // a bad flag value is a usage error, not an input format error
        let as_usage = |e: Error| match e {
            Error::Format { message, .. } => Error::Config(format!("command line: {message}")),
            other => other,
        };
        let kv = KeyValues::parse(&text, "command line").map_err(as_usage)?;
        cfg.run.apply(&kv, Path::new("")).map_err(as_usage)?;
        cfg.synth.apply(&kv).map_err(as_usage)?;
        kv.finish().map_err(as_usage)?;
        cfg.synth.hours = cfg.run.hours;
        cfg.synth.seed = cfg.run.seed;
        cfg.synth.scheme = cfg.run.scheme.clone();
        cfg.run.validate()?;
        if let Some(n) = cfg.run.workers {
            // a no-op when --workers or the environment already set the pool
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Ok(cfg)
    }
}

fn out_dir(run: &RunConfig) -> PathBuf {
    run.out_dir.clone().unwrap_or_else(|| PathBuf::from("loadprof-out"))
}

fn required<'a>(path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::Config(format!("no {what} file given (--{what} or `{what} =` in the config)")))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn external_gross(run: &RunConfig) -> Result<Option<GrossSeries>> {
    let Some(path) = &run.gross else {
        return Ok(None);
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_gross(BufReader::new(file), run.hours, &path.display().to_string()).map(Some)
}

fn dataset(run: &RunConfig) -> Result<(Dataset, CleaningReport, Option<GrossSeries>)> {
    let readings = required(&run.readings, "readings")?;
    let attributes = required(&run.attributes, "attributes")?;
    let (dataset, outcome) = load_dataset(readings, attributes, run.hours, &run.scheme)?;
    Ok((dataset, outcome.report, external_gross(run)?))
}

fn write(files: &ReportFiles, run: &RunConfig) -> Result<PathBuf> {
    let dir = out_dir(run);
    files.write_to(&dir)?;
    Ok(dir)
}

fn run(command: Command) -> Result<String> {
    match command {
        Command::Synth { opts, households } => {
            let extra = households.map_or(String::new(), |n| format!("households_total = {n}"));
            let cfg = opts.load(&extra)?;
            let fleet = generate_fleet(&cfg.synth)?;
            let dir = out_dir(&cfg.run);
            let readings = dir.join("readings.csv");
            let mut out = create(&readings)?;
            write_readings(&mut out, &fleet.profiles)
                .and_then(|_| out.flush())
                .map_err(|e| Error::io(&readings, e))?;
            let attributes = dir.join("attributes.csv");
            let mut out = create(&attributes)?;
            write_attributes(&mut out, &fleet.attributes)
                .and_then(|_| out.flush())
                .map_err(|e| Error::io(&attributes, e))?;
            Ok(format!(
                "synth: {} households x {} h, seed {} -> {}",
                fleet.profiles.len(),
                fleet.hours,
                cfg.synth.seed,
                dir.display()
            ))
        }
        Command::Ingest(opts) => {
            let run = opts.load("")?.run;
            let path = required(&run.readings, "readings")?;
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            let outcome = ingest_readings(BufReader::with_capacity(1 << 20, file), run.hours, &path.display().to_string())?;
            let mut files = ReportFiles::default();
            files.insert("cleaning_report.json", outcome.report.to_json() + "\n");
            let mut clean = Vec::new();
            write_readings(&mut clean, &outcome.profiles).expect("in-memory write");
            files.insert("clean_readings.csv", clean);
            let dir = write(&files, &run)?;
            Ok(format!(
                "ingest: {} accepted, {} rejected, {} malformed lines -> {}",
                outcome.report.accepted,
                outcome.report.rejected,
                outcome.diagnostics.total,
                dir.display()
            ))
        }
        Command::Categorize(opts) => {
            let run = opts.load("")?.run;
            let path = required(&run.attributes, "attributes")?;
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            let attrs = read_attributes(BufReader::new(file), &path.display().to_string())?;
            let table = apply_privacy_filter(build_category_table(&attrs, &run.scheme)?, run.scheme.privacy_k);
            let mut files = ReportFiles::default();
            files.insert("categories.json", table.to_json() + "\n");
            let dir = write(&files, &run)?;
            Ok(format!(
                "categorize: {} categories, {} suppressed, {} excluded -> {}",
                table.categories.len(),
                table.suppressed.len(),
                table.excluded.len(),
                dir.display()
            ))
        }
        Command::Peaks(opts) => {
            let run = opts.load("")?.run;
            let gross = match external_gross(&run)? {
                Some(g) => g,
                None => {
                    let path = required(&run.readings, "readings")?;
                    let file = File::open(path).map_err(|e| Error::io(path, e))?;
                    let outcome = ingest_readings(BufReader::with_capacity(1 << 20, file), run.hours, &path.display().to_string())?;
                    aggregate_gross(&outcome.profiles, run.hours)?
                }
            };
            let calendar = CalendarYear::new(run.hours);
            let mut files = ReportFiles::default();
            let mut gross_csv = Vec::new();
            loadprof_core::calendar::write_gross(&mut gross_csv, &gross).expect("in-memory write");
            files.insert("gross.csv", gross_csv);
            let mut counts = Vec::new();
            for &f in &run.peak_fractions {
                let cal = select_peak_hours(&gross, f, calendar)?;
                let label = loadprof_core::stats::level_label(f);
                counts.push(format!("{label} {} h", cal.hours.len()));
                files.insert(format!("peaks/calendar_{label}.json"), cal.to_json() + "\n");
            }
            let dir = write(&files, &run)?;
            Ok(format!("peaks: {} -> {}", counts.join(", "), dir.display()))
        }
        Command::Stats(opts) => stage("stats", &opts, |p| Ok(p.stats())),
        Command::Welch(opts) => stage("welch", &opts, |p| p.welch().map(|(f, _)| f)),
        Command::Bands(opts) => stage("bands", &opts, |p| p.bands()),
        Command::Coincidence(opts) => stage("coincidence", &opts, |p| p.coincidence()),
        Command::Ldc(opts) => stage("ldc", &opts, |p| p.ldc().map(|(f, ..)| f)),
        Command::Report(opts) => {
            let run = opts.load("")?.run;
            let (data, cleaning, gross) = dataset(&run)?;
            let files = build_report(&run, &data, &cleaning, gross)?;
            let dir = write(&files, &run)?;
            Ok(format!("report: {} -> {}", describe(&files), dir.display()))
        }
    }
}

fn stage(name: &str, opts: &Options, f: impl FnOnce(&Pipeline) -> Result<ReportFiles>) -> Result<String> {
    let run = opts.load("")?.run;
    let (data, _, gross) = dataset(&run)?;
    let pipeline = Pipeline::new(&run, &data, gross)?;
    let files = f(&pipeline)?;
    let dir = write(&files, &run)?;
    Ok(format!("{name}: {} -> {}", describe(&files), dir.display()))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        Error::Format { .. } | Error::Io { .. } => 2,
        Error::Domain(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("loadprof: workers must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("loadprof: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("loadprof: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
