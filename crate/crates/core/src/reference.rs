// Copyright 2026 The loadprof Authors
// SPDX-License-Identifier: Apache-2.0

//! Published reference values for the Danish 2017 fleet.
//!
//! The microdata behind them is confidential, so these values are never
//! reproduced numerically; they serve as transcription fixtures with their
//! own consistency checks, and as the inputs of report-format snapshots.

use std::collections::BTreeMap;

use crate::calendar::CalendarYear;
use crate::error::{Error, Result};
use crate::ingest::DEFAULT_HOURS;
use crate::stats::{AnnualStat, AnnualStatReport};
use crate::taxonomy::{CategoryCode, Dwelling};
use crate::welch::ResamplingReport;

pub const PEAK_HOURS_CSV: &str = include_str!("../fixtures/peak_hours_by_month.csv");
pub const FOCUS_CATEGORIES_CSV: &str = include_str!("../fixtures/focus_categories.csv");
pub const ANNUAL_MEANS_CSV: &str = include_str!("../fixtures/annual_means.csv");
pub const RESAMPLING_MEANS_CSV: &str = include_str!("../fixtures/resampling_means.csv");
pub const ACCEPTANCE_RATES_CSV: &str = include_str!("../fixtures/acceptance_rates.csv");

/// Published monthly peak-hour counts sum to 1747, five short of
/// ⌊0.2 · 8760⌋ = 1752. Kept as published.
pub const PUBLISHED_PEAK_TOTAL: usize = 1747;

/// Scalar reference values quoted in the text.
pub mod scalars {
    /// Household counts of the adoption scenarios.
    pub const BASE_HOUSEHOLDS: u64 = 54_445;
    pub const EV_HOUSEHOLDS: u64 = 265;
    pub const HP_HOUSEHOLDS: u64 = 635;
    /// Top-20% LDC window of the EV and HP scenarios, MWh: (max, mean, median).
    pub const EV_WINDOW_MWH: (f64, f64, f64) = (140.0, 61.0, 44.0);
    pub const HP_WINDOW_MWH: (f64, f64, f64) = (160.0, 89.0, 89.0);
    /// HP over EV window differences, percent.
    pub const HP_OVER_EV_MEAN_PCT: f64 = 46.0;
    pub const HP_OVER_EV_MAX_PCT: f64 = 14.0;
    /// EV per-household annual maxima, kWh.
    pub const EV_MEDIAN_MAX_KWH: f64 = 11.65;
    pub const EV_P98_MAX_BELOW_KWH: f64 = 16.0;
    /// Coincidence maxima at 3 and 4 kWh and the non-EV baseline rate.
    pub const EV_COINCIDENCE_MAX_3KWH: f64 = 0.25;
    pub const EV_COINCIDENCE_MAX_4KWH: f64 = 0.17;
    pub const NON_EV_BASELINE: f64 = 0.005;
    /// 95% band at 17–18 h on 5 January: large and small houses, kWh.
    pub const BAND95_LARGE_KWH: f64 = 2.94;
    pub const BAND95_SMALL_KWH: f64 = 2.67;
    /// January means of the HP categories at A2 and A3, kWh.
    pub const HP_JANUARY_A2_KWH: f64 = 1.69;
    pub const HP_JANUARY_A3_KWH: f64 = 1.99;
}

fn rows(text: &str, name: &str, header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        _ => return Err(Error::format(name, 1, format!("expected header `{header}`"))),
    }
    let width = header.split(',').count();
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let fields: Vec<String> = l.split(',').map(|f| f.trim().to_string()).collect();
            if fields.len() != width {
                return Err(Error::format(name, i + 1, format!("expected {width} fields")));
            }
            Ok((i + 1, fields))
        })
        .collect()
}

fn num<T: std::str::FromStr>(name: &str, line: usize, field: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::format(name, line, format!("bad number `{field}`")))
}

fn opt_num<T: std::str::FromStr>(name: &str, line: usize, field: &str) -> Result<Option<T>> {
    if field.is_empty() {
        Ok(None)
    } else {
        num(name, line, field).map(Some)
    }
}

fn check(ok: bool, what: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::domain(what.into()))
    }
}

/// Published peak hours per month.
pub fn peak_hours_by_month() -> Result<[usize; 12]> {
    let name = "peak_hours_by_month.csv";
    let mut counts = [usize::MAX; 12];
    for (line, f) in rows(PEAK_HOURS_CSV, name, "month,peak_hours")? {
        let month: usize = num(name, line, &f[0])?;
        if !(1..=12).contains(&month) || counts[month - 1] != usize::MAX {
            return Err(Error::format(name, line, "month missing, repeated or out of range"));
        }
        counts[month - 1] = num(name, line, &f[1])?;
    }
    check(counts.iter().all(|&c| c != usize::MAX), "every month must be listed")?;
    Ok(counts)
}

pub fn validate_peak_hours(counts: &[usize; 12]) -> Result<()> {
    let cal = CalendarYear::new(DEFAULT_HOURS);
    let total: usize = counts.iter().sum();
    check(total == PUBLISHED_PEAK_TOTAL, format!("monthly counts sum to {total}"))?;
    for (m, &c) in counts.iter().enumerate() {
        check(c <= cal.month_days(m).len() * 24, format!("month {} exceeds its hours", m + 1))?;
    }
    let peak = counts.iter().enumerate().max_by_key(|(_, c)| **c).map(|(m, _)| m);
    check(peak == Some(0), "January should hold the most peak hours")?;
    check(counts[6] == 0, "July has no peak hours")
}

#[derive(Debug, Clone, PartialEq)]
pub struct FocusCategory {
    pub code: CategoryCode,
    pub count: u64,
    pub rural_pct: Option<u32>,
    pub urban_pct: Option<u32>,
    pub p3_pct: Option<u32>,
    pub p4_pct: Option<u32>,
    /// Shares with zero to three children; blanks were withheld.
    pub children_pct: [Option<u32>; 4],
}

pub fn focus_categories() -> Result<Vec<FocusCategory>> {
    let name = "focus_categories.csv";
    let header = "category,count,rural_pct,urban_pct,p3_pct,p4_pct,ch0_pct,ch1_pct,ch2_pct,ch3_pct";
    rows(FOCUS_CATEGORIES_CSV, name, header)?
        .into_iter()
        .map(|(line, f)| {
            let code = f[0]
                .parse()
                .map_err(|e: crate::taxonomy::ParseCodeError| Error::format(name, line, e.to_string()))?;
            let o = |i: usize| opt_num::<u32>(name, line, &f[i]);
            Ok(FocusCategory {
                code,
                count: num(name, line, &f[1])?,
                rural_pct: o(2)?,
                urban_pct: o(3)?,
                p3_pct: o(4)?,
                p4_pct: o(5)?,
                children_pct: [o(6)?, o(7)?, o(8)?, o(9)?],
            })
        })
        .collect()
}

pub fn validate_focus_categories(cats: &[FocusCategory], privacy_k: u64) -> Result<()> {
    check(cats.len() == 6, "six focus categories")?;
    for c in cats {
        let code = c.code;
        check(c.count >= privacy_k, format!("{code} below the privacy threshold"))?;
        check(!(code.ev && code.hp), format!("{code} owns both technologies"))?;
        check(
            code.dwelling == Dwelling::House && code.occupancy.lower == 3 && code.income == 3,
            format!("{code} outside the focus group"),
        )?;
        if let (Some(r), Some(u)) = (c.rural_pct, c.urban_pct) {
            check(r + u == 100, format!("{code}: rural + urban = {}", r + u))?;
        }
        if let (Some(a), Some(b)) = (c.p3_pct, c.p4_pct) {
            check(a + b == 100, format!("{code}: P3 + P4 = {}", a + b))?;
        }
        let children: u32 = c.children_pct.iter().flatten().sum();
        check(children <= 100, format!("{code}: children shares exceed 100%"))?;
        if c.children_pct.iter().all(Option::is_some) {
            check(children == 100, format!("{code}: children shares sum to {children}"))?;
        }
    }
    Ok(())
}

/// Published annual means as a report, ready for the pivot writer.
pub fn annual_means() -> Result<AnnualStatReport> {
    let name = "annual_means.csv";
    let header = "occupancy,dwelling,area,income_1,income_2,income_3";
    let mut out = Vec::new();
    for (line, f) in rows(ANNUAL_MEANS_CSV, name, header)? {
        for band in 1..=3u8 {
            let Some(v) = opt_num::<f64>(name, line, &f[2 + usize::from(band)])? else {
                continue;
            };
            let text = format!("{}_{}_{}_€{band}_EV0_HP0", f[1], f[0], f[2]);
            let category: CategoryCode = text
                .parse()
                .map_err(|e: crate::taxonomy::ParseCodeError| Error::format(name, line, e.to_string()))?;
            out.push(AnnualStat {
                category,
                households: 0,
                avg_hourly_kwh: v,
            });
        }
    }
    Ok(AnnualStatReport { rows: out })
}

pub fn validate_annual_means(report: &AnnualStatReport) -> Result<()> {
    check(report.rows.len() == 54, format!("{} published cells", report.rows.len()))?;
    let mut cells: BTreeMap<(String, u8), BTreeMap<u8, f64>> = BTreeMap::new();
    for r in &report.rows {
        let c = r.category;
        check(!c.ev && !c.hp, format!("{c} owns a technology"))?;
        check(r.avg_hourly_kwh > 0.0 && r.avg_hourly_kwh < 29.0, format!("{c} out of range"))?;
        cells
            .entry((format!("{}_{}", c.occupancy, c.dwelling.code()), c.income))
            .or_default()
            .insert(c.area, r.avg_hourly_kwh);
    }
    // larger dwellings consume more within every occupancy/income cell
    for ((group, income), by_area) in &cells {
        let values: Vec<f64> = by_area.values().copied().collect();
        check(
            values.windows(2).all(|w| w[0] < w[1]),
            format!("{group} €{income}: not increasing in area"),
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResamplingRow {
    pub pair: String,
    pub level: String,
    pub group_a: String,
    pub group_b: String,
    pub avg_mean_a: f64,
    pub avg_mean_b: f64,
    pub avg_var_a: f64,
    pub avg_var_b: f64,
    pub acceptance_rate: Option<f64>,
}

pub fn resampling_table() -> Result<Vec<ResamplingRow>> {
    let name = "resampling_means.csv";
    let header = "pair,level,group_a,group_b,avg_mean_a,avg_mean_b,avg_var_a,avg_var_b";
    let mut out: Vec<ResamplingRow> = rows(RESAMPLING_MEANS_CSV, name, header)?
        .into_iter()
        .map(|(line, f)| {
            Ok(ResamplingRow {
                pair: f[0].clone(),
                level: f[1].clone(),
                group_a: f[2].clone(),
                group_b: f[3].clone(),
                avg_mean_a: num(name, line, &f[4])?,
                avg_mean_b: num(name, line, &f[5])?,
                avg_var_a: num(name, line, &f[6])?,
                avg_var_b: num(name, line, &f[7])?,
                acceptance_rate: None,
            })
        })
        .collect::<Result<_>>()?;
    let name = "acceptance_rates.csv";
    for (line, f) in rows(ACCEPTANCE_RATES_CSV, name, "pair,level,acceptance_rate")? {
        let row = out
            .iter_mut()
            .find(|r| r.pair == f[0] && r.level == f[1])
            .ok_or_else(|| Error::format(name, line, "no matching mean row"))?;
        row.acceptance_rate = Some(num(name, line, &f[2])?);
    }
    Ok(out)
}

pub fn validate_resampling(table: &[ResamplingRow]) -> Result<()> {
    check(table.len() == 9, "three pairs at three levels")?;
    let mean_of = |group: &str, level: &str| -> Option<(f64, f64)> {
        table.iter().find_map(|r| {
            if r.level != level {
                None
            } else if r.group_a == group {
                Some((r.avg_mean_a, r.avg_var_a))
            } else if r.group_b == group {
                Some((r.avg_mean_b, r.avg_var_b))
            } else {
                None
            }
        })
    };
    for r in table {
        let rate = r.acceptance_rate.ok_or_else(|| Error::domain("missing acceptance rate"))?;
        check((0.0..=1.0).contains(&rate), "acceptance rate outside [0, 1]")?;
        check(r.avg_var_a > 0.0 && r.avg_var_b > 0.0, "variances must be positive")?;
    }
    for level in ["y20", "y5", "y1"] {
        let m = |g| mean_of(g, level).ok_or_else(|| Error::domain(format!("{g} missing at {level}")));
        // both technology groups sit above the plain households, HP above EV
        check(m("HP")?.0 > m("noHP")?.0 && m("EV")?.0 > m("noEV")?.0, "technology raises the mean")?;
        check(m("HP")?.0 > m("EV")?.0, "HP above EV")?;
        check(m("noHP")? == m("noEV")?, "the plain group is shared by both comparisons")?;
        // group statistics are the same wherever the group appears
        for g in ["HP", "EV"] {
            let seen: Vec<(f64, f64)> = table
                .iter()
                .filter(|r| r.level == level)
                .filter_map(|r| {
                    if r.group_a == g {
                        Some((r.avg_mean_a, r.avg_var_a))
                    } else if r.group_b == g {
                        Some((r.avg_mean_b, r.avg_var_b))
                    } else {
                        None
                    }
                })
                .collect();
            check(seen.windows(2).all(|w| w[0] == w[1]), format!("{g} differs across pairs"))?;
        }
    }
    // narrower peak windows raise every group's mean
    for g in ["noHP", "HP", "EV"] {
        let means: Vec<f64> = ["y20", "y5", "y1"]
            .iter()
            .filter_map(|l| mean_of(g, l).map(|m| m.0))
            .collect();
        check(means.windows(2).all(|w| w[0] < w[1]), format!("{g} not increasing with level"))?;
    }
    Ok(())
}

/// Published rows as resampling reports, for the report-format snapshot.
/// Sample sizes follow the focus-category counts; seed is zero.
pub fn resampling_reports(table: &[ResamplingRow]) -> Vec<(String, String, ResamplingReport)> {
    let count = |g: &str| match g {
        "HP" => scalars::HP_HOUSEHOLDS,
        "EV" => scalars::EV_HOUSEHOLDS,
        _ => scalars::BASE_HOUSEHOLDS,
    } as usize;
    table
        .iter()
        .map(|r| {
            let rate = r.acceptance_rate.unwrap_or(0.0);
            let report = ResamplingReport {
                repetitions: 50,
                n_a: count(&r.group_a),
                n_b: count(&r.group_b),
                avg_mean_a: r.avg_mean_a,
                avg_mean_b: r.avg_mean_b,
                avg_var_a: r.avg_var_a,
                avg_var_b: r.avg_var_b,
                accepted: (rate * 50.0).round() as usize,
                acceptance_rate: rate,
                alpha: 0.05,
                seed: 0,
            };
            (r.pair.clone(), r.level.clone(), report)
        })
        .collect()
}

/// Parses and validates every fixture.
pub fn validate_all() -> Result<()> {
    validate_peak_hours(&peak_hours_by_month()?)?;
    validate_focus_categories(&focus_categories()?, 20)?;
    validate_annual_means(&annual_means()?)?;
    validate_resampling(&resampling_table()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_validate() {
        validate_all().unwrap();
    }

    #[test]
    fn peak_total_discrepancy() {
        let counts = peak_hours_by_month().unwrap();
        assert_eq!(counts.iter().sum::<usize>(), 1747);
        assert_eq!(crate::calendar::peak_hour_count(0.2, DEFAULT_HOURS), 1752);
        assert_eq!(counts[0], 321);
    }

    #[test]
    fn annual_means_round_trip_through_pivot() {
        let report = annual_means().unwrap();
        assert_eq!(report.to_pivot_csv(), ANNUAL_MEANS_CSV);
    }

    #[test]
    fn corrupted_tables_fail() {
        let mut counts = peak_hours_by_month().unwrap();
        counts[6] = 5;
        assert!(validate_peak_hours(&counts).is_err());
        let mut cats = focus_categories().unwrap();
        cats[0].urban_pct = Some(80);
        assert!(validate_focus_categories(&cats, 20).is_err());
        let mut table = resampling_table().unwrap();
        table[0].avg_mean_b = 0.1;
        assert!(validate_resampling(&table).is_err());
    }
}
