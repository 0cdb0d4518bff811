// Copyright 2026 The loadprof Authors
// SPDX-License-Identifier: Apache-2.0

//! Per-category statistics over peak hours and the full year.
//!
//! Means and deviations pool every present (household, hour) observation of
//! a subset and use the population (divide-by-N) convention. Sums are kept
//! in integer watt-hours, so accumulators merge exactly in any order.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::calendar::PeakCalendar;
use crate::ingest::CleanProfile;
use crate::kwh::{Kwh, Reading};
use crate::taxonomy::CategoryCode;

/// Mergeable count / sum / sum-of-squares state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct StreamAccumulator {
    pub count: u64,
    /// Watt-hours.
    pub sum: u64,
    /// Squared watt-hours.
    pub sum_sq: u128,
}

impl StreamAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a non-negative observation.
    pub fn push(&mut self, value: Kwh) {
        assert!(value.0 >= 0, "observations must be non-negative");
        self.push_millis(value.0 as u64);
    }

    #[inline]
    pub fn push_millis(&mut self, millis: u64) {
        self.count += 1;
        self.sum += millis;
        self.sum_sq += u128::from(millis) * u128::from(millis);
    }

    #[inline]
    pub fn push_reading(&mut self, reading: Reading) {
        self.push_millis(u64::from(reading.millis()));
    }

    pub fn merge(self, other: Self) -> Self {
        StreamAccumulator {
            count: self.count + other.count,
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Mean in kWh, `None` without observations.
    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum as f64 / self.count as f64 / 1000.0)
    }

    /// `N·Σq² − (Σq)²` in squared watt-hours; exact and never negative.
    fn scaled_spread(&self) -> u128 {
        let n = u128::from(self.count);
        let s = u128::from(self.sum);
        n * self.sum_sq - s * s
    }

    /// Population variance (divide by N) in kWh².
    pub fn variance(&self) -> Option<f64> {
        (self.count > 0).then(|| {
            let n = self.count as f64;
            self.scaled_spread() as f64 / (n * n) / 1e6
        })
    }

    /// Population standard deviation in kWh.
    pub fn std_dev(&self) -> Option<f64> {
        self.variance().map(f64::sqrt)
    }

    /// Sample variance (divide by N − 1) in kWh².
    pub fn sample_variance(&self) -> Option<f64> {
        (self.count > 1).then(|| {
            let n = self.count as f64;
            self.scaled_spread() as f64 / (n * (n - 1.0)) / 1e6
        })
    }
}

impl FromIterator<Kwh> for StreamAccumulator {
    fn from_iter<I: IntoIterator<Item = Kwh>>(iter: I) -> Self {
        let mut acc = StreamAccumulator::new();
        for v in iter {
            acc.push(v);
        }
        acc
    }
}

/// Free-function form of [`StreamAccumulator::merge`].
pub fn merge(a: StreamAccumulator, b: StreamAccumulator) -> StreamAccumulator {
    a.merge(b)
}

/// Label of a yearly peak level, e.g. `y20` for the top 20%.
pub fn level_label(fraction: f64) -> String {
    let pct = format!("{:.2}", fraction * 100.0);
    let pct = pct.trim_end_matches('0').trim_end_matches('.');
    format!("y{pct}")
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Subset {
    /// 1-based month of the monthly calendar.
    Month(u8),
    /// Whole-year peak level.
    Level(String),
}

impl std::fmt::Display for Subset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Subset::Month(m) => write!(f, "{m}"),
            Subset::Level(l) => f.write_str(l),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakStatEntry {
    pub category: CategoryCode,
    pub subset: Subset,
    pub acc: StreamAccumulator,
}

impl PeakStatEntry {
    pub fn mean(&self) -> Option<f64> {
        self.acc.mean()
    }

    pub fn std_dev(&self) -> Option<f64> {
        self.acc.std_dev()
    }

    pub fn n_obs(&self) -> u64 {
        self.acc.count
    }
}

/// Monthly and yearly-level peak statistics, category by category.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PeakStatReport {
    pub entries: Vec<PeakStatEntry>,
}

pub const PEAK_STATS_HEADER: &str = "category,month_or_level,mean_kwh,std_kwh,n_obs";

fn fmt_opt(value: Option<f64>) -> String {
    value.map_or(String::new(), |v| format!("{v:.6}"))
}

impl PeakStatReport {
    pub fn get(&self, category: &CategoryCode, subset: &Subset) -> Option<&PeakStatEntry> {
        self.entries
            .iter()
            .find(|e| &e.category == category && &e.subset == subset)
    }

    /// Subsets without observations have empty mean and std fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{PEAK_STATS_HEADER}").unwrap();
        for e in &self.entries {
            writeln!(
                out,
                "{},{},{},{},{}",
                e.category,
                e.subset,
                fmt_opt(e.mean()),
                fmt_opt(e.std_dev()),
                e.n_obs()
            )
            .unwrap();
        }
        out
    }
}

/// Accumulators for one household: 12 monthly slots, then one per level.
fn household_peak_accumulators(
    profile: &CleanProfile,
    monthly: &PeakCalendar,
    levels: &[&PeakCalendar],
) -> Vec<StreamAccumulator> {
    let mut accs = vec![StreamAccumulator::new(); 12 + levels.len()];
    for &h in &monthly.hours {
        if let Some(v) = profile.get(h) {
            accs[monthly.calendar.month_of_hour(h)].push_reading(v);
        }
    }
    for (i, cal) in levels.iter().enumerate() {
        for &h in &cal.hours {
            if let Some(v) = profile.get(h) {
                accs[12 + i].push_reading(v);
            }
        }
    }
    accs
}

fn merge_all(mut a: Vec<StreamAccumulator>, b: Vec<StreamAccumulator>) -> Vec<StreamAccumulator> {
    for (x, y) in a.iter_mut().zip(b) {
        *x = x.merge(y);
    }
    a
}

/// Peak statistics per category: one row per month of `monthly`, then one
/// row per yearly level.
pub fn peak_stats(
    groups: &BTreeMap<CategoryCode, Vec<&CleanProfile>>,
    monthly: &PeakCalendar,
    levels: &[&PeakCalendar],
) -> PeakStatReport {
    let slots = 12 + levels.len();
    let mut entries = Vec::new();
    for (code, profiles) in groups {
        let accs = profiles
            .par_iter()
            .map(|p| household_peak_accumulators(p, monthly, levels))
            .reduce(|| vec![StreamAccumulator::new(); slots], merge_all);
        for (i, acc) in accs.into_iter().enumerate() {
            let subset = if i < 12 {
                Subset::Month(i as u8 + 1)
            } else {
                Subset::Level(level_label(levels[i - 12].fraction))
            };
            entries.push(PeakStatEntry {
                category: *code,
                subset,
                acc,
            });
        }
    }
    PeakStatReport { entries }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelStats {
    pub mean: f64,
    pub variance: f64,
    pub n_obs: u64,
}

/// Pooled population mean and variance per category and level.
/// Levels without observations are absent from the map.
pub fn yearly_level_stats(
    groups: &BTreeMap<CategoryCode, Vec<&CleanProfile>>,
    levels: &[&PeakCalendar],
) -> BTreeMap<(CategoryCode, String), LevelStats> {
    let mut out = BTreeMap::new();
    for (code, profiles) in groups {
        for cal in levels {
            let acc = pooled_accumulator(profiles, cal);
            if let (Some(mean), Some(variance)) = (acc.mean(), acc.variance()) {
                out.insert(
                    (*code, level_label(cal.fraction)),
                    LevelStats {
                        mean,
                        variance,
                        n_obs: acc.count,
                    },
                );
            }
        }
    }
    out
}

pub fn pooled_accumulator(profiles: &[&CleanProfile], calendar: &PeakCalendar) -> StreamAccumulator {
    profiles
        .par_iter()
        .map(|p| {
            let mut acc = StreamAccumulator::new();
            for &h in &calendar.hours {
                if let Some(v) = p.get(h) {
                    acc.push_reading(v);
                }
            }
            acc
        })
        .reduce(StreamAccumulator::new, StreamAccumulator::merge)
}

/// Every present (household, peak hour) value in kWh, household by household.
pub fn pooled_observations(profiles: &[&CleanProfile], calendar: &PeakCalendar) -> Vec<f64> {
    profiles
        .iter()
        .flat_map(|p| calendar.hours.iter().filter_map(|&h| p.get(h)))
        .map(Reading::as_f64)
        .collect()
}

/// Each household's mean over its present peak hours.
pub fn household_peak_means(profiles: &[&CleanProfile], calendar: &PeakCalendar) -> Vec<f64> {
    profiles
        .iter()
        .filter_map(|p| {
            let mut acc = StreamAccumulator::new();
            for &h in &calendar.hours {
                if let Some(v) = p.get(h) {
                    acc.push_reading(v);
                }
            }
            acc.mean()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnualStat {
    pub category: CategoryCode,
    pub households: usize,
    /// Mean over households of corrected annual total / H.
    pub avg_hourly_kwh: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AnnualStatReport {
    pub rows: Vec<AnnualStat>,
}

pub fn annual_means(groups: &BTreeMap<CategoryCode, Vec<&CleanProfile>>) -> AnnualStatReport {
    let rows = groups
        .iter()
        .filter(|(_, p)| !p.is_empty())
        .map(|(code, profiles)| {
            let total: f64 = profiles.iter().map(|p| p.annual_corrected).sum();
            let hours = profiles[0].hours() as f64;
            AnnualStat {
                category: *code,
                households: profiles.len(),
                avg_hourly_kwh: total / (profiles.len() as f64 * hours),
            }
        })
        .collect();
    AnnualStatReport { rows }
}

impl AnnualStatReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("category,households,avg_hourly_kwh\n");
        for r in &self.rows {
            writeln!(out, "{},{},{:.6}", r.category, r.households, r.avg_hourly_kwh).unwrap();
        }
        out
    }

    /// Categories without EV and heat pump, pivoted with one column per
    /// income band: `occupancy,dwelling,area,income_1,...`.
    pub fn to_pivot_csv(&self) -> String {
        let rows: Vec<&AnnualStat> = self
            .rows
            .iter()
            .filter(|r| !r.category.ev && !r.category.hp)
            .collect();
        let bands = rows.iter().map(|r| r.category.income).max().unwrap_or(0);
        let mut pivot: BTreeMap<(_, _, u8), BTreeMap<u8, f64>> = BTreeMap::new();
        for r in rows {
            let c = r.category;
            pivot
                .entry((c.occupancy, c.dwelling, c.area))
                .or_default()
                .insert(c.income, r.avg_hourly_kwh);
        }
        let mut out = String::from("occupancy,dwelling,area");
        for b in 1..=bands {
            write!(out, ",income_{b}").unwrap();
        }
        out.push('\n');
        for ((occ, dw, area), by_income) in pivot {
            write!(out, "{occ},{},A{area}", dw.code()).unwrap();
            for b in 1..=bands {
                out.push(',');
                if let Some(v) = by_income.get(&b) {
                    write!(out, "{v:.3}").unwrap();
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Nearest-rank order statistic: the `⌈num/den · n⌉`-th smallest element
/// (1-based, at least the first) of an ascending slice.
pub fn nearest_rank<T: Copy>(sorted: &[T], num: usize, den: usize) -> Option<T> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (num * sorted.len()).div_ceil(den).max(1);
    Some(sorted[rank.min(sorted.len()) - 1])
}

/// Histogram bins of one kWh; the last bin also holds 29.0 kWh.
pub const MAX_HISTOGRAM_BINS: usize = 29;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxReport {
    pub households: usize,
    pub median_kwh: f64,
    pub p98_kwh: f64,
    pub p99_kwh: f64,
    /// Count of household maxima per 1 kWh bin `[i, i+1)`.
    pub histogram: Vec<usize>,
}

/// Per-household yearly maxima, summarized by nearest-rank percentiles.
/// Profiles without a present value are skipped.
pub fn household_maxima(profiles: &[&CleanProfile]) -> Option<MaxReport> {
    let mut maxima: Vec<u32> = profiles
        .iter()
        .filter_map(|p| p.max_reading())
        .map(Reading::millis)
        .collect();
    if maxima.is_empty() {
        return None;
    }
    maxima.sort_unstable();
    let mut histogram = vec![0; MAX_HISTOGRAM_BINS];
    for &m in &maxima {
        histogram[((m / 1000) as usize).min(MAX_HISTOGRAM_BINS - 1)] += 1;
    }
    let at = |num, den| f64::from(nearest_rank(&maxima, num, den).unwrap()) / 1000.0;
    Some(MaxReport {
        households: maxima.len(),
        median_kwh: at(50, 100),
        p98_kwh: at(98, 100),
        p99_kwh: at(99, 100),
        histogram,
    })
}
