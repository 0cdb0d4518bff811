// Copyright 2026 The loadprof Authors
// SPDX-License-Identifier: Apache-2.0

//! Load duration curves and technology-adoption extrapolation.
//!
//! An adoption scenario removes a base category's hourly aggregate from the
//! gross series and adds the adopter category's aggregate scaled by the
//! household-count ratio `r = n_base / n_adopter`:
//!
//! ```text
//! up(t) = gross(t) − base(t) + r · adopter(t)
//! ```
//!
//! The series is kept as exact integers multiplied by `n_adopter`, so the
//! identity scenario and the linearity in `r` hold without rounding.

use std::fmt::Write as _;

use serde::Serialize;

use crate::calendar::{peak_hour_count, GrossSeries};
use crate::error::{Error, Result};
use crate::kwh::Kwh;
use crate::taxonomy::CategoryCode;

/// Output unit for aggregate series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    #[default]
    Kwh,
    Mwh,
}

impl Unit {
    pub fn suffix(self) -> &'static str {
        match self {
            Unit::Kwh => "kwh",
            Unit::Mwh => "mwh",
        }
    }

    fn from_kwh(self, kwh: f64) -> f64 {
        match self {
            Unit::Kwh => kwh,
            Unit::Mwh => kwh / 1000.0,
        }
    }
}

/// A series sorted non-increasing, stored as integers over a common
/// denominator: value in kWh = `scaled / (denominator · 1000)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadDurationCurve {
    pub scaled: Vec<i128>,
    pub denominator: u64,
    /// Source hour of each rank; ties keep the earlier hour first.
    pub source_hours: Vec<usize>,
    pub provenance: String,
}

impl LoadDurationCurve {
    pub fn from_scaled(series: &[i128], denominator: u64, provenance: impl Into<String>) -> Self {
        let mut order: Vec<usize> = (0..series.len()).collect();
        order.sort_by(|&a, &b| series[b].cmp(&series[a]));
        LoadDurationCurve {
            scaled: order.iter().map(|&h| series[h]).collect(),
            denominator,
            source_hours: order,
            provenance: provenance.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.scaled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scaled.is_empty()
    }

    pub fn kwh(&self, rank: usize) -> f64 {
        scaled_to_kwh(self.scaled[rank], self.denominator)
    }

    pub fn values_kwh(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.kwh(i)).collect()
    }

    pub fn to_csv(&self, unit: Unit) -> String {
        let mut out = format!("rank,ldc_{}\n", unit.suffix());
        for rank in 0..self.len() {
            writeln!(out, "{rank},{:.3}", unit.from_kwh(self.kwh(rank))).unwrap();
        }
        out
    }
}

fn scaled_to_kwh(scaled: i128, denominator: u64) -> f64 {
    scaled as f64 / denominator as f64 / 1000.0
}

/// Descending sort of an hourly series.
pub fn build_ldc(series: &[Kwh], provenance: impl Into<String>) -> LoadDurationCurve {
    let scaled: Vec<i128> = series.iter().map(|v| i128::from(v.0)).collect();
    LoadDurationCurve::from_scaled(&scaled, 1, provenance)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdoptionScenario {
    pub base_code: CategoryCode,
    pub adopter_code: CategoryCode,
    pub n_base: u64,
    pub n_adopter: u64,
}

impl AdoptionScenario {
    pub fn new(base_code: CategoryCode, adopter_code: CategoryCode, n_base: u64, n_adopter: u64) -> Result<Self> {
        if n_base < 1 || n_adopter < 1 {
            return Err(Error::domain("scenario household counts must be at least 1"));
        }
        Ok(AdoptionScenario {
            base_code,
            adopter_code,
            n_base,
            n_adopter,
        })
    }

    pub fn ratio(&self) -> f64 {
        self.n_base as f64 / self.n_adopter as f64
    }

    /// Label of the extrapolated curve, e.g. `Up_H_P3_A3_€3_EV1_HP0`.
    pub fn label(&self) -> String {
        format!("Up_{}", self.adopter_code)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowStats {
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    pub window_fraction: f64,
    pub window_hours: usize,
}

/// Max, mean and nearest-rank median over the top `⌊fraction · H⌋` ranks.
pub fn peak_window_stats(ldc: &LoadDurationCurve, fraction: f64) -> Result<WindowStats> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::domain(format!("window fraction {fraction} outside (0, 1)")));
    }
    let w = peak_hour_count(fraction, ldc.len());
    if w == 0 {
        return Err(Error::domain("window holds no hours"));
    }
    let window = &ldc.scaled[..w];
    let sum: i128 = window.iter().sum();
    // ascending rank ⌈w/2⌉ sits at descending index w − ⌈w/2⌉
    let median_idx = w - w.div_ceil(2);
    Ok(WindowStats {
        max: ldc.kwh(0),
        mean: sum as f64 / w as f64 / ldc.denominator as f64 / 1000.0,
        median: ldc.kwh(median_idx),
        window_fraction: fraction,
        window_hours: w,
    })
}

/// Percentage differences of `other` relative to `reference`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowComparison {
    pub max_pct: f64,
    pub mean_pct: f64,
    pub median_pct: f64,
}

pub fn compare_windows(reference: &WindowStats, other: &WindowStats) -> WindowComparison {
    let pct = |a: f64, b: f64| (b - a) / a * 100.0;
    WindowComparison {
        max_pct: pct(reference.max, other.max),
        mean_pct: pct(reference.mean, other.mean),
        median_pct: pct(reference.median, other.median),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtrapolationResult {
    pub scenario: AdoptionScenario,
    /// `up(t) · n_adopter` in watt-hours.
    pub up_scaled: Vec<i128>,
    pub up_ldc: LoadDurationCurve,
    pub window: WindowStats,
    pub negative_hours: Vec<usize>,
    pub warnings: Vec<String>,
}

impl ExtrapolationResult {
    pub fn denominator(&self) -> u64 {
        self.scenario.n_adopter
    }

    pub fn up_kwh(&self, hour: usize) -> f64 {
        scaled_to_kwh(self.up_scaled[hour], self.denominator())
    }

    pub fn series_csv(&self, gross: &GrossSeries, unit: Unit) -> String {
        let s = unit.suffix();
        let mut out = format!("hour,gross_{s},up_{s}\n");
        for (h, g) in gross.values.iter().enumerate() {
            writeln!(
                out,
                "{h},{:.3},{:.3}",
                unit.from_kwh(g.as_f64()),
                unit.from_kwh(self.up_kwh(h))
            )
            .unwrap();
        }
        out
    }

    pub fn stats_json(&self, unit: Unit) -> String {
        let w = &self.window;
        let value = serde_json::json!({
            "scenario": self.scenario.label(),
            "base": self.scenario.base_code.to_string(),
            "n_base": self.scenario.n_base,
            "n_adopter": self.scenario.n_adopter,
            "ratio": self.scenario.ratio(),
            "unit": unit,
            "max": unit.from_kwh(w.max),
            "mean": unit.from_kwh(w.mean),
            "median": unit.from_kwh(w.median),
            "window_fraction": w.window_fraction,
            "window_hours": w.window_hours,
            "warnings": self.warnings,
        });
        serde_json::to_string_pretty(&value).expect("stats serialize")
    }
}

/// Substitutes the base category by the scaled adopter category.
///
/// Negative hours do not fail the call; they are listed in the result
/// together with a warning.
pub fn extrapolate_adoption(
    gross: &GrossSeries,
    base_agg: &[Kwh],
    adopter_agg: &[Kwh],
    scenario: &AdoptionScenario,
    window_fraction: f64,
) -> Result<ExtrapolationResult> {
    let hours = gross.hours();
    if base_agg.len() != hours || adopter_agg.len() != hours {
        return Err(Error::domain("gross, base and adopter series differ in length"));
    }
    let n_base = i128::from(scenario.n_base);
    let n_adopter = i128::from(scenario.n_adopter);
    let up_scaled: Vec<i128> = (0..hours)
        .map(|t| {
            (i128::from(gross.values[t].0) - i128::from(base_agg[t].0)) * n_adopter
                + n_base * i128::from(adopter_agg[t].0)
        })
        .collect();
    let negative_hours: Vec<usize> = (0..hours).filter(|&t| up_scaled[t] < 0).collect();
    let mut warnings = Vec::new();
    if !negative_hours.is_empty() {
        let shown: Vec<String> = negative_hours.iter().take(20).map(usize::to_string).collect();
        warnings.push(format!(
            "extrapolated load negative at {} hour(s): {}{}",
            negative_hours.len(),
            shown.join(" "),
            if negative_hours.len() > 20 { " ..." } else { "" }
        ));
    }
    let up_ldc = LoadDurationCurve::from_scaled(&up_scaled, scenario.n_adopter, scenario.label());
    let window = peak_window_stats(&up_ldc, window_fraction)?;
    Ok(ExtrapolationResult {
        scenario: scenario.clone(),
        up_scaled,
        up_ldc,
        window,
        negative_hours,
        warnings,
    })
}
