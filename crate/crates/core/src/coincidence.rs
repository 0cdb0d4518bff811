// Copyright 2026 The loadprof Authors
// SPDX-License-Identifier: Apache-2.0

//! EV coincidence approximated by threshold exceedance.
//!
//! Household and charging loads are metered together, so an hour above a
//! charging-level threshold (default 3 and 4 kWh) is taken as a charging
//! event. The same rate in the matched category without EVs is the proxy's
//! false-positive floor.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use crate::calendar::CalendarYear;
use crate::error::{Error, Result};
use crate::ingest::CleanProfile;
use crate::kwh::Kwh;
use crate::taxonomy::CategoryCode;

pub const DEFAULT_THRESHOLDS: [Kwh; 2] = [Kwh(3000), Kwh(4000)];

/// Clock hours 15:00 to 20:00.
pub const AFTERNOON: RangeInclusive<usize> = 15..=19;

/// July, as 0-based days of a non-leap year.
pub const SUMMER_HOLIDAY: RangeInclusive<usize> = 181..=211;

/// Per-hour share of households above a threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoincidenceSeries {
    pub category: CategoryCode,
    pub threshold: Kwh,
    /// Households strictly above the threshold, per hour.
    pub exceed: Vec<u32>,
    /// Households with a present value, per hour.
    pub denominators: Vec<u32>,
}

impl CoincidenceSeries {
    pub fn hours(&self) -> usize {
        self.exceed.len()
    }

    /// `None` when no household has a value at that hour.
    pub fn probability(&self, hour: usize) -> Option<f64> {
        let den = self.denominators[hour];
        (den > 0).then(|| f64::from(self.exceed[hour]) / f64::from(den))
    }

    pub fn probabilities(&self) -> Vec<Option<f64>> {
        (0..self.hours()).map(|h| self.probability(h)).collect()
    }

    /// Mean of the hourly probabilities over hours with data.
    pub fn year_average(&self) -> Option<f64> {
        mean_of(self.probabilities().into_iter().flatten())
    }
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn exceedance_series(
    profiles: &[&CleanProfile],
    category: CategoryCode,
    threshold: Kwh,
) -> Result<CoincidenceSeries> {
    if threshold.0 <= 0 {
        return Err(Error::domain("exceedance threshold must be positive"));
    }
    let hours = profiles.first().map_or(0, |p| p.hours());
    if profiles.iter().any(|p| p.hours() != hours) {
        return Err(Error::domain("profiles differ in length"));
    }
    let limit = threshold.0;
    let (exceed, denominators) = profiles
        .par_iter()
        .fold(
            || (vec![0u32; hours], vec![0u32; hours]),
            |(mut ex, mut den), p| {
                for (h, v) in p.values.iter().enumerate() {
                    if let Some(v) = v {
                        den[h] += 1;
                        ex[h] += u32::from(i64::from(v.millis()) > limit);
                    }
                }
                (ex, den)
            },
        )
        .reduce(
            || (vec![0u32; hours], vec![0u32; hours]),
            |(mut ea, mut da), (eb, db)| {
                for h in 0..hours {
                    ea[h] += eb[h];
                    da[h] += db[h];
                }
                (ea, da)
            },
        );
    Ok(CoincidenceSeries {
        category,
        threshold,
        exceed,
        denominators,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineRate {
    pub category: CategoryCode,
    pub threshold_kwh: f64,
    /// Year-average exceedance; `None` without any observation.
    pub year_average: Option<f64>,
}

/// Year-average exceedance of a matched non-EV category at each threshold.
pub fn baseline_rates(
    profiles: &[&CleanProfile],
    category: CategoryCode,
    thresholds: &[Kwh],
) -> Result<Vec<BaselineRate>> {
    thresholds
        .iter()
        .map(|&t| {
            let series = exceedance_series(profiles, category, t)?;
            Ok(BaselineRate {
                category,
                threshold_kwh: t.as_f64(),
                year_average: series.year_average(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoincidenceSummary {
    pub category: CategoryCode,
    pub threshold_kwh: f64,
    pub year_max: Option<f64>,
    pub year_max_hour: Option<usize>,
    pub annual_mean: Option<f64>,
    /// `[min, max]` over afternoon hours (15–20 h) of all days.
    pub afternoon_range: Option<[f64; 2]>,
    pub monthly_means: [Option<f64>; 12],
    pub holiday_days: [usize; 2],
    pub holiday_mean: Option<f64>,
}

pub fn coincidence_summary(
    series: &CoincidenceSeries,
    calendar: CalendarYear,
    holiday: RangeInclusive<usize>,
) -> CoincidenceSummary {
    let probs = series.probabilities();
    let mut year_max: Option<(usize, f64)> = None;
    for (h, p) in probs.iter().enumerate() {
        if let Some(p) = *p {
            if year_max.is_none_or(|(_, m)| p > m) {
                year_max = Some((h, p));
            }
        }
    }
    let afternoon: Vec<f64> = probs
        .iter()
        .enumerate()
        .filter(|(h, _)| AFTERNOON.contains(&(h % 24)))
        .filter_map(|(_, p)| *p)
        .collect();
    let afternoon_range = (!afternoon.is_empty()).then(|| {
        [
            afternoon.iter().copied().fold(f64::INFINITY, f64::min),
            afternoon.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ]
    });
    let mut monthly_means = [None; 12];
    for (m, slot) in monthly_means.iter_mut().enumerate() {
        let days = calendar.month_days(m);
        *slot = mean_of(
            probs
                .iter()
                .enumerate()
                .filter(|(h, _)| days.contains(&(h / 24)))
                .filter_map(|(_, p)| *p),
        );
    }
    let holiday_mean = mean_of(
        probs
            .iter()
            .enumerate()
            .filter(|(h, _)| holiday.contains(&(h / 24)))
            .filter_map(|(_, p)| *p),
    );
    CoincidenceSummary {
        category: series.category,
        threshold_kwh: series.threshold.as_f64(),
        year_max: year_max.map(|(_, p)| p),
        year_max_hour: year_max.map(|(h, _)| h),
        annual_mean: series.year_average(),
        afternoon_range,
        monthly_means,
        holiday_days: [*holiday.start(), *holiday.end()],
        holiday_mean,
    }
}

/// EV exceedance minus the baseline's year average. An approximation only:
/// the baseline is not hour-specific.
pub fn net_of_baseline(series: &CoincidenceSeries, baseline_average: f64) -> Vec<Option<f64>> {
    series
        .probabilities()
        .into_iter()
        .map(|p| p.map(|p| p - baseline_average))
        .collect()
}

pub const COINCIDENCE_HEADER: &str = "hour,threshold_kwh,p_exceed,n_denominator";

/// Rows for every series, threshold by threshold.
pub fn coincidence_csv(series: &[CoincidenceSeries]) -> String {
    let mut out = String::new();
    writeln!(out, "{COINCIDENCE_HEADER}").unwrap();
    for s in series {
        for h in 0..s.hours() {
            let p = s.probability(h).map_or(String::new(), |p| format!("{p:.6}"));
            writeln!(out, "{h},{},{p},{}", s.threshold, s.denominators[h]).unwrap();
        }
    }
    out
}

pub fn net_csv(series: &CoincidenceSeries, baseline_average: f64) -> String {
    let mut out = String::from("hour,threshold_kwh,p_net_approx\n");
    for (h, p) in net_of_baseline(series, baseline_average).into_iter().enumerate() {
        let p = p.map_or(String::new(), |p| format!("{p:.6}"));
        writeln!(out, "{h},{},{p}", series.threshold).unwrap();
    }
    out
}
