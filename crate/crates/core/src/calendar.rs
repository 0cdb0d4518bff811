// Copyright 2026 The loadprof Authors
// SPDX-License-Identifier: Apache-2.0

//! Gross load aggregation and peak-hour selection.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{CleanProfile, LEAP_HOURS};
use crate::kwh::{parse_millis, Kwh};

pub const GROSS_HEADER: &str = "hour,kwh";

const DAYS_IN_MONTH: [usize; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];

/// Maps hour-of-year indices to civil months and days. Hour 0 is
/// January 1, 00:00; a year of 8784 hours has February 29.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CalendarYear {
    pub hours: usize,
    month_start_day: [usize; 13],
}

impl CalendarYear {
    pub fn new(hours: usize) -> Self {
        let mut month_start_day = [0; 13];
        for m in 0..12 {
            let leap_day = usize::from(m == 1 && hours == LEAP_HOURS);
            month_start_day[m + 1] = month_start_day[m] + DAYS_IN_MONTH[m] + leap_day;
        }
        CalendarYear {
            hours,
            month_start_day,
        }
    }

    pub fn is_leap(&self) -> bool {
        self.hours == LEAP_HOURS
    }

    pub fn days(&self) -> usize {
        self.hours.div_ceil(24)
    }

    /// 0-based month of an hour. Hours past December 31 stay in December.
    pub fn month_of_hour(&self, hour: usize) -> usize {
        self.month_of_day(hour / 24)
    }

    pub fn month_of_day(&self, day: usize) -> usize {
        self.month_start_day[1..12]
            .iter()
            .take_while(|&&start| day >= start)
            .count()
    }

    /// Day-of-year range `[start, end)` of a 0-based month.
    pub fn month_days(&self, month: usize) -> std::ops::Range<usize> {
        self.month_start_day[month]..self.month_start_day[month + 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrossSource {
    FleetAggregate,
    External,
}

/// Hourly aggregate load.
#[derive(Debug, Clone, PartialEq)]
pub struct GrossSeries {
    pub values: Vec<Kwh>,
    pub source: GrossSource,
    pub warning: Option<String>,
}

impl GrossSeries {
    pub fn external(values: Vec<Kwh>) -> Result<Self> {
        if let Some(h) = values.iter().position(|v| v.0 < 0) {
            return Err(Error::domain(format!("gross load at hour {h} is negative")));
        }
        Ok(GrossSeries {
            values,
            source: GrossSource::External,
            warning: None,
        })
    }

    pub fn hours(&self) -> usize {
        self.values.len()
    }

    pub fn total(&self) -> Kwh {
        Kwh(self.values.iter().map(|v| v.0).sum())
    }
}

/// Per-hour sum of present values; missing hours contribute zero.
pub fn aggregate_hourly<'a>(
    profiles: impl IntoParallelIterator<Item = &'a CleanProfile>,
    hours: usize,
) -> Result<Vec<Kwh>> {
    let sums = profiles
        .into_par_iter()
        .try_fold(
            || vec![0i64; hours],
            |mut acc, p| {
                if p.hours() != hours {
                    return Err(Error::domain(format!(
                        "meter {} has {} hours, expected {hours}",
                        p.meter_id,
                        p.hours()
                    )));
                }
                for (slot, v) in acc.iter_mut().zip(&p.values) {
                    if let Some(v) = v {
                        *slot += i64::from(v.millis());
                    }
                }
                Ok(acc)
            },
        )
        .try_reduce(
            || vec![0i64; hours],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok(a)
            },
        )?;
    Ok(sums.into_iter().map(Kwh).collect())
}

/// Fleet gross series. An empty fleet yields zeros and a warning.
pub fn aggregate_gross(profiles: &[CleanProfile], hours: usize) -> Result<GrossSeries> {
    let values = aggregate_hourly(profiles, hours)?;
    Ok(GrossSeries {
        values,
        source: GrossSource::FleetAggregate,
        warning: profiles
            .is_empty()
            .then(|| "empty fleet: gross series is all zero".to_string()),
    })
}

/// The top `fraction` of hours by gross load.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakCalendar {
    pub fraction: f64,
    /// Selected hours, ascending.
    pub hours: Vec<usize>,
    pub monthly_counts: [usize; 12],
    #[serde(skip)]
    pub calendar: CalendarYear,
}

/// `⌊fraction · hours⌋`, tolerant of representation error in `fraction`
/// (0.2 · 8760 must give 1752).
pub fn peak_hour_count(fraction: f64, hours: usize) -> usize {
    (fraction * hours as f64 + 1e-9).floor() as usize
}

/// Selects the `⌊fraction · H⌋` highest-load hours; ties go to the earlier hour.
pub fn select_peak_hours(
    gross: &GrossSeries,
    fraction: f64,
    calendar: CalendarYear,
) -> Result<PeakCalendar> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::domain(format!("peak fraction {fraction} outside (0, 1)")));
    }
    if gross.hours() != calendar.hours {
        return Err(Error::domain(format!(
            "gross series has {} hours, calendar expects {}",
            gross.hours(),
            calendar.hours
        )));
    }
    let count = peak_hour_count(fraction, gross.hours());
    let mut order: Vec<usize> = (0..gross.hours()).collect();
    order.sort_by(|&a, &b| gross.values[b].cmp(&gross.values[a]).then(a.cmp(&b)));
    let mut hours = order[..count].to_vec();
    hours.sort_unstable();
    let mut monthly_counts = [0; 12];
    for &h in &hours {
        monthly_counts[calendar.month_of_hour(h)] += 1;
    }
    Ok(PeakCalendar {
        fraction,
        hours,
        monthly_counts,
        calendar,
    })
}

impl PeakCalendar {
    /// Selected hours split by month.
    pub fn monthly_partition(&self) -> [Vec<usize>; 12] {
        let mut parts: [Vec<usize>; 12] = Default::default();
        for &h in &self.hours {
            parts[self.calendar.month_of_hour(h)].push(h);
        }
        parts
    }

    /// Membership mask over all hours.
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.calendar.hours];
        for &h in &self.hours {
            mask[h] = true;
        }
        mask
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("calendar serializes")
    }
}

/// Free function form of [`PeakCalendar::monthly_partition`].
pub fn monthly_partition(calendar: &PeakCalendar) -> [Vec<usize>; 12] {
    calendar.monthly_partition()
}

/// Reads an external gross series (`hour,kwh`). Every hour must appear once.
pub fn read_gross<R: BufRead>(reader: R, hours: usize, context: &str) -> Result<GrossSeries> {
    let mut values: Vec<Option<Kwh>> = vec![None; hours];
    let mut lines = reader.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim_start_matches('\u{feff}').trim() == GROSS_HEADER => {}
        Some((_, Err(e))) => return Err(Error::io(context, e)),
        _ => return Err(Error::format(context, 1, format!("expected header `{GROSS_HEADER}`"))),
    }
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(context, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: String| Error::format(context, line_no, msg);
        let Some((hour, kwh)) = line.split_once(',') else {
            return Err(bad("expected 2 fields".into()));
        };
        let hour: usize = hour.trim().parse().map_err(|_| bad(format!("bad hour `{hour}`")))?;
        if hour >= hours {
            return Err(bad(format!("hour {hour} outside [0, {}]", hours - 1)));
        }
        let kwh = parse_millis(kwh.trim().as_bytes()).ok_or_else(|| bad(format!("bad kwh `{kwh}`")))?;
        if kwh < 0 {
            return Err(bad("negative gross load".into()));
        }
        if values[hour].replace(Kwh(kwh)).is_some() {
            return Err(bad(format!("hour {hour} repeated")));
        }
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(h, v)| v.ok_or_else(|| Error::format(context, 0, format!("hour {h} missing"))))
        .collect::<Result<Vec<_>>>()?;
    GrossSeries::external(values)
}

pub fn write_gross<W: Write>(mut out: W, gross: &GrossSeries) -> std::io::Result<()> {
    writeln!(out, "{GROSS_HEADER}")?;
    for (h, v) in gross.values.iter().enumerate() {
        writeln!(out, "{h},{v}")?;
    }
    Ok(())
}
