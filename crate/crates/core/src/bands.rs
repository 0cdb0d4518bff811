// Copyright 2026 The loadprof Authors
// SPDX-License-Identifier: Apache-2.0

//! Hourly distribution bands for one day of one category.
//!
//! Quantiles use the nearest-rank rule: the `⌈p·n⌉`-th smallest value.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::CleanProfile;
use crate::stats::{nearest_rank, StreamAccumulator};
use crate::taxonomy::CategoryCode;

/// Quantile levels 5%, 10%, …, 95%, in percent.
pub const BAND_LEVELS: [usize; 19] = [5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60, 65, 70, 75, 80, 85, 90, 95];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HourBand {
    /// kWh at each of [`BAND_LEVELS`].
    pub quantiles: [f64; 19],
    pub mean: f64,
    pub median: f64,
    /// Population standard deviation.
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayBandProfile {
    pub category: CategoryCode,
    /// 0-based day of year.
    pub day: usize,
    /// Clock hours 0..24; `None` where no household had a value.
    pub hours: Vec<Option<HourBand>>,
}

/// Bands over an ascending sample in watt-hours.
pub fn hour_band(sorted: &[u32]) -> Option<HourBand> {
    if sorted.is_empty() {
        return None;
    }
    let kwh = |m: u32| f64::from(m) / 1000.0;
    let mut quantiles = [0.0; 19];
    for (q, &level) in quantiles.iter_mut().zip(&BAND_LEVELS) {
        *q = kwh(nearest_rank(sorted, level, 100)?);
    }
    let mut acc = StreamAccumulator::new();
    for &m in sorted {
        acc.push_millis(u64::from(m));
    }
    Some(HourBand {
        quantiles,
        mean: acc.mean()?,
        median: kwh(nearest_rank(sorted, 50, 100)?),
        std: acc.std_dev()?,
        n: sorted.len(),
    })
}

/// Values present at `hour` across `profiles`, ascending.
pub fn hour_sample(profiles: &[&CleanProfile], hour: usize) -> Vec<u32> {
    let mut sample: Vec<u32> = profiles
        .iter()
        .filter_map(|p| p.get(hour))
        .map(|r| r.millis())
        .collect();
    sample.sort_unstable();
    sample
}

pub fn day_bands(
    profiles: &[&CleanProfile],
    category: CategoryCode,
    day: usize,
) -> Result<DayBandProfile> {
    if profiles.is_empty() {
        return Err(Error::domain(format!("category {category} has no households")));
    }
    let hours = profiles[0].hours();
    if (day + 1) * 24 > hours {
        return Err(Error::domain(format!("day {day} outside a year of {hours} hours")));
    }
    let bands = (0..24)
        .map(|clock| hour_band(&hour_sample(profiles, day * 24 + clock)))
        .collect();
    Ok(DayBandProfile {
        category,
        day,
        hours: bands,
    })
}

impl DayBandProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("hour");
        for level in BAND_LEVELS {
            write!(out, ",q{level:02}").unwrap();
        }
        out.push_str(",mean,median,std,n\n");
        for (clock, band) in self.hours.iter().enumerate() {
            write!(out, "{clock}").unwrap();
            match band {
                Some(b) => {
                    for q in b.quantiles {
                        write!(out, ",{q:.3}").unwrap();
                    }
                    writeln!(out, ",{:.6},{:.3},{:.6},{}", b.mean, b.median, b.std, b.n).unwrap();
                }
                None => {
                    out.push_str(&",".repeat(BAND_LEVELS.len() + 3));
                    out.push_str(",0\n");
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Skewness {
    pub mean_minus_median: f64,
    /// Third standardized moment; absent when the sample has zero spread.
    pub third_moment: Option<f64>,
}

/// Right skew shows as positive values of both diagnostics.
pub fn skewness_diagnostic(sample: &[f64]) -> Result<Skewness> {
    if sample.len() < 3 {
        return Err(Error::domain("skewness needs at least three observations"));
    }
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = nearest_rank(&sorted, 50, 100).expect("non-empty");
    let m2 = sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = sample.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    Ok(Skewness {
        mean_minus_median: mean - median,
        third_moment: (m2 > 0.0).then(|| m3 / m2.powf(1.5)),
    })
}
