// Copyright 2026 The loadprof Authors
// SPDX-License-Identifier: Apache-2.0

//! End-to-end pipeline and output rendering.
//!
//! Every stage renders into an in-memory file set keyed by relative path,
//! so the same bytes can be written to disk, hashed, or compared across
//! worker counts. No absolute path ever enters an output file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::bands::{day_bands, hour_sample, skewness_diagnostic, Skewness};
use crate::calendar::{aggregate_gross, aggregate_hourly, select_peak_hours, CalendarYear, GrossSeries, GrossSource, PeakCalendar};
use crate::coincidence::{
    baseline_rates, coincidence_csv, coincidence_summary, exceedance_series, net_csv, BaselineRate,
    CoincidenceSummary,
};
use crate::config::{ResampleUnit, RunConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::ingest::CleaningReport;
use crate::ldc::{build_ldc, compare_windows, extrapolate_adoption, AdoptionScenario, ExtrapolationResult, WindowComparison};
use crate::stats::{
    annual_means, household_maxima, household_peak_means, level_label, peak_stats, pooled_observations, MaxReport,
};
use crate::synth::calibration_report;
use crate::taxonomy::CategoryCode;
use crate::welch::{resampling_protocol, welch_csv, ResamplingConfig, ResamplingReport};

/// Output files keyed by relative path.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportFiles {
    pub files: BTreeMap<String, Vec<u8>>,
}

impl ReportFiles {
    pub fn insert(&mut self, name: impl Into<String>, body: impl Into<Vec<u8>>) {
        self.files.insert(name.into(), body.into());
    }

    pub fn extend(&mut self, other: ReportFiles) {
        self.files.extend(other.files);
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(Vec::as_slice)
    }

    pub fn text(&self, name: &str) -> Option<&str> {
        self.get(name).and_then(|b| std::str::from_utf8(b).ok())
    }

    /// Writes every file below `dir`, creating subdirectories.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        for (name, body) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report values serialize");
    s.push('\n');
    s
}

/// Runs `f` on a dedicated pool of `workers` threads (default: all cores).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Dataset plus the derived gross series and peak calendars.
pub struct Pipeline<'a> {
    pub config: &'a RunConfig,
    pub dataset: &'a Dataset,
    pub gross: GrossSeries,
    /// One calendar per configured peak fraction, in configuration order.
    pub calendars: Vec<PeakCalendar>,
    pub notes: Vec<String>,
}

impl<'a> Pipeline<'a> {
    /// `gross` overrides the fleet aggregate when given.
    pub fn new(config: &'a RunConfig, dataset: &'a Dataset, gross: Option<GrossSeries>) -> Result<Self> {
        config.validate()?;
        let gross = match gross {
            Some(g) => {
                if g.hours() != dataset.hours {
                    return Err(Error::domain(format!(
                        "gross series has {} hours, the dataset {}",
                        g.hours(),
                        dataset.hours
                    )));
                }
                g
            }
            None => aggregate_gross(&dataset.profiles, dataset.hours)?,
        };
        let calendar = CalendarYear::new(dataset.hours);
        let calendars = config
            .peak_fractions
            .iter()
            .map(|&f| select_peak_hours(&gross, f, calendar))
            .collect::<Result<_>>()?;
        let mut notes = Vec::new();
        if let Some(w) = &gross.warning {
            notes.push(w.clone());
        }
        Ok(Pipeline {
            config,
            dataset,
            gross,
            calendars,
            notes,
        })
    }

    fn category(&self, code: &CategoryCode) -> Result<Vec<&'a crate::ingest::CleanProfile>> {
        let profiles = self.dataset.category_profiles(code);
        if profiles.is_empty() {
            return Err(Error::domain(format!("category {code} is empty or suppressed")));
        }
        Ok(profiles)
    }

    fn monthly_calendar(&self) -> &PeakCalendar {
        self.calendars
            .iter()
            .find(|c| (c.fraction - 0.2).abs() < 1e-12)
            .unwrap_or(&self.calendars[0])
    }

    pub fn peaks(&self) -> ReportFiles {
        let mut out = ReportFiles::default();
        let mut gross = Vec::new();
        crate::calendar::write_gross(&mut gross, &self.gross).expect("in-memory write");
        out.insert("gross.csv", gross);
        for cal in &self.calendars {
            out.insert(format!("peaks/calendar_{}.json", level_label(cal.fraction)), cal.to_json() + "\n");
        }
        out
    }

    pub fn stats(&self) -> ReportFiles {
        let mut out = ReportFiles::default();
        let groups = self.dataset.by_category();
        let levels: Vec<&PeakCalendar> = self.calendars.iter().collect();
        out.insert("stats/peak_stats.csv", peak_stats(&groups, self.monthly_calendar(), &levels).to_csv());
        let annual = annual_means(&groups);
        out.insert("stats/annual_means.csv", annual.to_csv());
        out.insert("stats/annual_means_pivot.csv", annual.to_pivot_csv());
        let maxima: BTreeMap<String, MaxReport> = groups
            .iter()
            .filter_map(|(c, p)| household_maxima(p).map(|m| (c.to_string(), m)))
            .collect();
        out.insert("stats/maxima.json", json(&maxima));
        out
    }

    /// The three comparisons: without vs with HP, without vs with EV, HP vs EV.
    pub fn welch_pairs(&self) -> [(&'static str, CategoryCode, CategoryCode); 3] {
        let c = self.config;
        [
            ("noHP-HP", c.base_category, c.hp_category),
            ("noEV-EV", c.base_category, c.ev_category),
            ("HP-EV", c.hp_category, c.ev_category),
        ]
    }

    pub fn welch(&self) -> Result<(ReportFiles, Vec<(String, String, ResamplingReport)>)> {
        let cfg = ResamplingConfig {
            repetitions: self.config.repetitions,
            alpha: self.config.alpha,
            seed: self.config.seed,
            replacement: self.config.replacement,
        };
        let mut rows = Vec::new();
        for cal in &self.calendars {
            let level = level_label(cal.fraction);
            for (pair, a, b) in self.welch_pairs() {
                let pool = |code: &CategoryCode| -> Result<Vec<f64>> {
                    let profiles = self.category(code)?;
                    Ok(match self.config.resample_unit {
                        ResampleUnit::Observations => pooled_observations(&profiles, cal),
                        ResampleUnit::HouseholdMeans => household_peak_means(&profiles, cal),
                    })
                };
                let (obs_a, obs_b) = (pool(&a)?, pool(&b)?);
                let (n_a, n_b) = (self.dataset.table.count(&a), self.dataset.table.count(&b));
                let report = resampling_protocol(&obs_a, &obs_b, n_a, n_b, &cfg)?;
                rows.push((pair.to_string(), level.clone(), report));
            }
        }
        let mut out = ReportFiles::default();
        out.insert(
            "welch/welch.csv",
            welch_csv(rows.iter().map(|(p, l, r)| (p.as_str(), l.as_str(), r))),
        );
        Ok((out, rows))
    }

    pub fn bands(&self) -> Result<ReportFiles> {
        #[derive(Serialize)]
        struct HourSkew {
            category: String,
            hour: usize,
            skewness: Skewness,
        }
        let mut out = ReportFiles::default();
        let mut skews = Vec::new();
        let day = self.config.band_day;
        for code in &self.config.band_categories {
            let profiles = self.category(code)?;
            let bands = day_bands(&profiles, *code, day)?;
            out.insert(format!("bands/{}_day{day:03}.csv", code.file_stem()), bands.to_csv());
            for clock in 0..24 {
                let sample: Vec<f64> = hour_sample(&profiles, day * 24 + clock)
                    .into_iter()
                    .map(|m| f64::from(m) / 1000.0)
                    .collect();
                if let Ok(skewness) = skewness_diagnostic(&sample) {
                    skews.push(HourSkew {
                        category: code.to_string(),
                        hour: clock,
                        skewness,
                    });
                }
            }
        }
        out.insert(format!("bands/skewness_day{day:03}.json"), json(&skews));
        Ok(out)
    }

    pub fn coincidence(&self) -> Result<ReportFiles> {
        #[derive(Serialize)]
        struct Summary {
            summaries: Vec<CoincidenceSummary>,
            baseline: Vec<BaselineRate>,
            note: &'static str,
        }
        let ev_code = self.config.ev_category;
        let base_code = ev_code.with_ev(false);
        let ev = self.category(&ev_code)?;
        let series = self
            .config
            .thresholds
            .iter()
            .map(|&t| exceedance_series(&ev, ev_code, t))
            .collect::<Result<Vec<_>>>()?;
        let calendar = CalendarYear::new(self.dataset.hours);
        let summaries = series
            .iter()
            .map(|s| coincidence_summary(s, calendar, self.config.holiday()))
            .collect();
        let baseline = match self.dataset.category_profiles(&base_code) {
            p if p.is_empty() => Vec::new(),
            p => baseline_rates(&p, base_code, &self.config.thresholds)?,
        };
        let mut out = ReportFiles::default();
        out.insert(format!("coincidence/{}.csv", ev_code.file_stem()), coincidence_csv(&series));
        let mut net = String::new();
        for (s, b) in series.iter().zip(&baseline) {
            if let Some(avg) = b.year_average {
                let body = net_csv(s, avg);
                if net.is_empty() {
                    net.push_str(&body);
                } else {
                    net.push_str(body.split_once('\n').map_or("", |(_, rest)| rest));
                }
            }
        }
        if !net.is_empty() {
            out.insert(format!("coincidence/{}_net.csv", ev_code.file_stem()), net);
        }
        out.insert(
            "coincidence/summary.json",
            json(&Summary {
                summaries,
                baseline,
                note: "net series subtract the non-EV year average; an approximation, not hour-specific",
            }),
        );
        Ok(out)
    }

    /// Substitutes the base category by `adopter`, scaled by household counts.
    pub fn scenario(&self, adopter: CategoryCode) -> Result<ExtrapolationResult> {
        let base = self.config.base_category;
        let base_p = self.category(&base)?;
        let adopter_p = self.category(&adopter)?;
        let hours = self.dataset.hours;
        let base_agg = aggregate_hourly(base_p.clone(), hours)?;
        let adopter_agg = aggregate_hourly(adopter_p.clone(), hours)?;
        let scenario = AdoptionScenario::new(base, adopter, base_p.len() as u64, adopter_p.len() as u64)?;
        extrapolate_adoption(&self.gross, &base_agg, &adopter_agg, &scenario, self.config.window_fraction)
    }

    pub fn ldc(&self) -> Result<(ReportFiles, ExtrapolationResult, ExtrapolationResult, WindowComparison)> {
        #[derive(Serialize)]
        struct Comparison<'c> {
            reference: String,
            other: String,
            window_fraction: f64,
            #[serde(flatten)]
            pct: &'c WindowComparison,
        }
        let unit = self.config.unit;
        let mut out = ReportFiles::default();
        out.insert("ldc/gross_ldc.csv", build_ldc(&self.gross.values, "gross").to_csv(unit));
        let ev = self.scenario(self.config.ev_category)?;
        let hp = self.scenario(self.config.hp_category)?;
        for (tag, r) in [("ev", &ev), ("hp", &hp)] {
            out.insert(format!("ldc/{tag}_series.csv"), r.series_csv(&self.gross, unit));
            out.insert(format!("ldc/{tag}_ldc.csv"), r.up_ldc.to_csv(unit));
            out.insert(format!("ldc/{tag}_stats.json"), r.stats_json(unit) + "\n");
        }
        let pct = compare_windows(&ev.window, &hp.window);
        out.insert(
            "ldc/comparison.json",
            json(&Comparison {
                reference: ev.scenario.label(),
                other: hp.scenario.label(),
                window_fraction: self.config.window_fraction,
                pct: &pct,
            }),
        );
        Ok((out, ev, hp, pct))
    }

    pub fn calibration(&self) -> Result<ReportFiles> {
        let report = calibration_report(self.dataset, self.config.band_day)?;
        let mut out = ReportFiles::default();
        out.insert("calibration.json", report.to_json() + "\n");
        Ok(out)
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    hours: usize,
    households: usize,
    categories: usize,
    suppressed: usize,
    excluded: usize,
    unattributed: usize,
    gross_source: &'static str,
    peak_fractions: &'a [f64],
    alpha: f64,
    repetitions: usize,
    seed: u64,
    notes: &'a [String],
    files: Vec<&'a str>,
}

/// Runs every stage and returns the complete output set. Stages that need
/// an empty or suppressed category are skipped with a note.
pub fn build_report(config: &RunConfig, dataset: &Dataset, cleaning: &CleaningReport, gross: Option<GrossSeries>) -> Result<ReportFiles> {
    let mut pipeline = Pipeline::new(config, dataset, gross)?;
    let mut out = ReportFiles::default();
    out.insert("cleaning_report.json", cleaning.to_json() + "\n");
    out.insert("categories.json", dataset.table.to_json() + "\n");
    out.extend(pipeline.peaks());
    out.extend(pipeline.stats());
    let mut notes = std::mem::take(&mut pipeline.notes);
    let stages: [(&str, Result<ReportFiles>); 5] = [
        ("welch", pipeline.welch().map(|(f, _)| f)),
        ("bands", pipeline.bands()),
        ("coincidence", pipeline.coincidence()),
        ("ldc", pipeline.ldc().map(|(f, ..)| f)),
        ("calibration", pipeline.calibration()),
    ];
    for (stage, result) in stages {
        match result {
            Ok(files) => out.extend(files),
            Err(Error::Domain(msg)) => notes.push(format!("{stage} skipped: {msg}")),
            Err(e) => return Err(e),
        }
    }
    let summary = Summary {
        hours: dataset.hours,
        households: dataset.profiles.len(),
        categories: dataset.table.categories.len(),
        suppressed: dataset.table.suppressed.len(),
        excluded: dataset.table.excluded.len(),
        unattributed: dataset.unattributed.len(),
        gross_source: match pipeline.gross.source {
            GrossSource::FleetAggregate => "fleet",
            GrossSource::External => "external",
        },
        peak_fractions: &config.peak_fractions,
        alpha: config.alpha,
        repetitions: config.repetitions,
        seed: config.seed,
        notes: &notes,
        files: out.files.keys().map(String::as_str).collect(),
    };
    let summary = json(&summary);
    out.insert("summary.json", summary);
    Ok(out)
}

/// One-line digest of a file set, for logs.
pub fn describe(files: &ReportFiles) -> String {
    let bytes: usize = files.files.values().map(Vec::len).sum();
    let mut s = String::new();
    write!(s, "{} files, {bytes} bytes", files.files.len()).unwrap();
    s
}
