// Copyright 2026 The loadprof Authors
// SPDX-License-Identifier: Apache-2.0

//! Deterministic synthetic household fleet.
//!
//! The generator is calibrated by construction, not fitted: a two-peak daily
//! base shape with a winter multiplier and lognormal noise, contiguous EV
//! charging blocks at rated power, and a winter-peaking heat-pump add-on with
//! symmetric noise. Every household draws from its own substream keyed by
//! `(seed, household index)`, so output does not depend on thread count.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::bands::{hour_sample, skewness_diagnostic};
use crate::calendar::CalendarYear;
use crate::coincidence::{exceedance_series, SUMMER_HOLIDAY};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::ingest::{CleanProfile, DEFAULT_HOURS, LEAP_HOURS};
use crate::kwh::{Kwh, Reading, READING_CAP};
use crate::rng::{domain, substream};
use crate::stats::{nearest_rank, StreamAccumulator};
use crate::taxonomy::{CategoryCode, CategoryScheme, Dwelling, HouseholdAttributes};

/// Daily base-load shape. Magnitudes are relative; the shape is normalized
/// to a daily mean of one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaseShape {
    pub morning_hour: f64,
    pub morning_magnitude: f64,
    pub evening_hour: f64,
    pub evening_magnitude: f64,
    pub overnight_floor: f64,
    pub daytime_magnitude: f64,
    /// Weekend consumption relative to weekdays.
    pub weekend_factor: f64,
    /// Weekend morning peak shift in hours.
    pub weekend_morning_shift: f64,
}

impl Default for BaseShape {
    fn default() -> Self {
        BaseShape {
            morning_hour: 7.5,
            morning_magnitude: 0.55,
            evening_hour: 17.5,
            evening_magnitude: 1.35,
            overnight_floor: 0.45,
            daytime_magnitude: 0.3,
            weekend_factor: 1.08,
            weekend_morning_shift: 2.0,
        }
    }
}

fn bump(h: f64, centre: f64, width: f64) -> f64 {
    // circular distance so late-evening bumps wrap past midnight
    let d = (h - centre).rem_euclid(24.0);
    let d = d.min(24.0 - d);
    (-0.5 * (d / width).powi(2)).exp()
}

impl BaseShape {
    /// Normalized 24-hour profile; `weekend` shifts the morning peak and
    /// raises the daytime plateau.
    pub fn daily(&self, weekend: bool) -> [f64; 24] {
        let shift = if weekend { self.weekend_morning_shift } else { 0.0 };
        let daytime = if weekend { self.daytime_magnitude * 1.6 } else { self.daytime_magnitude };
        let mut day = [0.0; 24];
        for (h, v) in day.iter_mut().enumerate() {
            let t = h as f64 + 0.5;
            *v = self.overnight_floor
                + self.morning_magnitude * bump(t, self.morning_hour + 0.5 + shift, 1.2)
                + daytime * bump(t, 13.0, 3.0)
                + self.evening_magnitude * bump(t, self.evening_hour + 0.5, 1.8);
        }
        let mean = day.iter().sum::<f64>() / 24.0;
        let scale = if weekend { self.weekend_factor } else { 1.0 } / mean;
        day.iter_mut().for_each(|v| *v *= scale);
        day
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChargerClass {
    pub power_kw: f64,
    pub battery_kwh: f64,
    /// Share of EV households using this class.
    pub share: f64,
    pub plugin_probability: f64,
    /// Plugin probability multiplier during the summer holiday.
    pub holiday_dip: f64,
}

impl ChargerClass {
    fn validate(&self) -> Result<()> {
        let ok = self.power_kw > 0.0
            && self.battery_kwh > 0.0
            && self.share >= 0.0
            && (0.0..=1.0).contains(&self.plugin_probability)
            && (0.0..=1.0).contains(&self.holiday_dip);
        if !ok {
            return Err(Error::Config(format!("invalid charger class {self:?}")));
        }
        Ok(())
    }
}

pub fn default_charger_classes() -> Vec<ChargerClass> {
    let class = |power_kw, battery_kwh, share| ChargerClass {
        power_kw,
        battery_kwh,
        share,
        plugin_probability: 0.3,
        holiday_dip: 0.45,
    };
    vec![class(3.7, 40.0, 0.5), class(11.0, 60.0, 0.485), class(22.0, 75.0, 0.015)]
}

/// Afternoon-weighted plugin start distribution (relative weights).
pub fn default_start_weights() -> [f64; 24] {
    let mut w = [0.0; 24];
    for (h, v) in w.iter_mut().enumerate() {
        let t = h as f64;
        *v = 0.15 + 2.5 * bump(t, 16.5, 1.8) + 0.7 * bump(t, 21.5, 1.5) + 0.25 * bump(t, 6.0, 1.0);
    }
    w
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatModel {
    /// Mean add-on (kWh/h) at the seasonal zero crossing.
    pub offset_kwh: f64,
    /// Winter-peaking seasonal amplitude (kWh/h).
    pub amplitude_kwh: f64,
    /// Day of year of the seasonal maximum.
    pub phase_day: f64,
    /// Standard deviation of the hourly noise (kWh) before symmetric
    /// clamping to ±mean.
    pub noise_kwh: f64,
    /// Standard deviation of the per-household scale around one.
    pub household_spread: f64,
}

impl Default for HeatModel {
    fn default() -> Self {
        HeatModel {
            offset_kwh: 0.6,
            amplitude_kwh: 0.65,
            phase_day: 15.0,
            noise_kwh: 1.2,
            household_spread: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthConfig {
    pub hours: usize,
    pub seed: u64,
    /// Households per category, in generation order.
    pub categories: Vec<(CategoryCode, usize)>,
    pub shape: BaseShape,
    /// Mean kWh/h of a one-person house in the lowest area and income band.
    pub base_level_kwh: f64,
    /// Winter multiplier amplitude of the base load.
    pub seasonal_amplitude: f64,
    /// Lognormal sigma of hourly noise.
    pub noise_scale: f64,
    /// Lognormal sigma of the per-household level.
    pub household_spread: f64,
    /// Weekday of 1 January, Monday = 0.
    pub first_weekday: usize,
    pub chargers: Vec<ChargerClass>,
    pub start_weights: [f64; 24],
    pub weekend_plugin_factor: f64,
    pub heat: HeatModel,
    /// Probability that an hour is left missing.
    pub gap_rate: f64,
    #[serde(skip)]
    pub scheme: CategoryScheme,
}

fn code(s: &str) -> CategoryCode {
    s.parse().expect("built-in category code")
}

/// The focus categories: the base category, its small and medium area
/// variants, EV and heat-pump owners, plus a few other households.
pub fn default_categories() -> Vec<(CategoryCode, usize)> {
    [
        ("H_P3_A3_€3_EV0_HP0", 2000),
        ("H_P3_A1_€3_EV0_HP0", 400),
        ("H_P3_A2_€3_EV0_HP0", 800),
        ("H_P3_A3_€3_EV1_HP0", 265),
        ("H_P3_A2_€3_EV0_HP1", 198),
        ("H_P3_A3_€3_EV0_HP1", 635),
        ("H_P1_A1_€1_EV0_HP0", 300),
        ("H_P2_A2_€2_EV0_HP0", 400),
        ("H_P5+_A3_€3_EV0_HP0", 300),
        ("Ap_P1_A1_€1_EV0_HP0", 400),
        ("Ap_P2_A2_€2_EV0_HP0", 300),
    ]
    .iter()
    .map(|&(c, n)| (code(c), n))
    .collect()
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            hours: DEFAULT_HOURS,
            seed: 7,
            categories: default_categories(),
            shape: BaseShape::default(),
            base_level_kwh: 0.21,
            seasonal_amplitude: 0.3,
            noise_scale: 0.3,
            household_spread: 0.25,
            // 1 January 2017 was a Sunday
            first_weekday: 6,
            chargers: default_charger_classes(),
            start_weights: default_start_weights(),
            weekend_plugin_factor: 0.85,
            heat: HeatModel::default(),
            gap_rate: 0.0,
            scheme: CategoryScheme::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hours != DEFAULT_HOURS && self.hours != LEAP_HOURS {
            return Err(Error::Config(format!("hours must be {DEFAULT_HOURS} or {LEAP_HOURS}")));
        }
        let s = &self.shape;
        let magnitudes = [
            s.morning_magnitude,
            s.evening_magnitude,
            s.overnight_floor,
            s.daytime_magnitude,
            s.weekend_factor,
            self.base_level_kwh,
            self.seasonal_amplitude,
            self.noise_scale,
            self.household_spread,
            self.weekend_plugin_factor,
            self.heat.offset_kwh,
            self.heat.amplitude_kwh,
            self.heat.noise_kwh,
            self.heat.household_spread,
        ];
        if magnitudes.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::Config("synthetic magnitudes must be finite and ≥ 0".into()));
        }
        if s.overnight_floor + s.morning_magnitude + s.evening_magnitude + s.daytime_magnitude <= 0.0 {
            return Err(Error::Config("base shape is identically zero".into()));
        }
        if self.seasonal_amplitude >= 1.0 {
            return Err(Error::Config("seasonal amplitude must be below 1".into()));
        }
        if !(0.0..1.0).contains(&self.gap_rate) {
            return Err(Error::Config("gap rate must lie in [0, 1)".into()));
        }
        if self.first_weekday > 6 {
            return Err(Error::Config("first weekday must be 0 (Monday) to 6".into()));
        }
        for c in &self.chargers {
            c.validate()?;
        }
        let needs_ev = self.categories.iter().any(|(c, n)| c.ev && *n > 0);
        if needs_ev && self.chargers.iter().map(|c| c.share).sum::<f64>() <= 0.0 {
            return Err(Error::Config("EV categories need at least one charger class".into()));
        }
        if self.start_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
            || self.start_weights.iter().sum::<f64>() <= 0.0
        {
            return Err(Error::Config("plugin start weights must be ≥ 0, not all zero".into()));
        }
        self.scheme.validate()?;
        let mut seen = std::collections::HashSet::new();
        for (c, _) in &self.categories {
            if !seen.insert(*c) {
                return Err(Error::Config(format!("category {c} listed twice")));
            }
            self.check_code(c)?;
        }
        Ok(())
    }

    fn check_code(&self, c: &CategoryCode) -> Result<()> {
        let scheme = &self.scheme;
        let area_bands = match c.dwelling {
            Dwelling::Apartment => scheme.apartment_area_edges.len() + 1,
            Dwelling::House => scheme.house_area_edges.len() + 1,
        };
        let occ = scheme.occupancy_lower_bounds.iter().position(|&b| b == c.occupancy.lower);
        let valid = occ.is_some()
            && usize::from(c.area) <= area_bands
            && usize::from(c.income) <= scheme.income_edges.len() + 1
            && !(c.ev && c.hp && scheme.exclude_ev_and_hp);
        if !valid {
            return Err(Error::Config(format!("category {c} does not fit the scheme")));
        }
        Ok(())
    }

    pub fn total_households(&self) -> usize {
        self.categories.iter().map(|(_, n)| n).sum()
    }

    /// Scales every category count so the fleet totals exactly `total`
    /// (largest remainder; ties go to the earlier category).
    pub fn scaled_to(mut self, total: usize) -> Self {
        let current = self.total_households();
        if current == 0 {
            return self;
        }
        let mut remainders = Vec::with_capacity(self.categories.len());
        let mut assigned = 0;
        for (i, (_, n)) in self.categories.iter_mut().enumerate() {
            let exact = *n * total;
            *n = exact / current;
            assigned += *n;
            remainders.push((exact % current, i));
        }
        remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, i) in remainders.iter().take(total - assigned) {
            self.categories[i].1 += 1;
        }
        self
    }

    /// Mean base kWh/h of a category before seasonal and daily shaping.
    /// Monotone in occupancy, area and income band.
    pub fn category_level(&self, c: &CategoryCode) -> f64 {
        let occ_idx = self
            .scheme
            .occupancy_lower_bounds
            .iter()
            .position(|&b| b == c.occupancy.lower)
            .unwrap_or(0) as f64;
        let occupancy = 1.0 + 0.45 * occ_idx - 0.05 * occ_idx * (occ_idx - 1.0).max(0.0);
        let area = 1.0 + 0.2 * f64::from(c.area - 1);
        let income = 1.0 + 0.04 * f64::from(c.income - 1);
        let dwelling = match c.dwelling {
            Dwelling::Apartment => 0.62,
            Dwelling::House => 1.0,
        };
        self.base_level_kwh * occupancy * area * income * dwelling
    }
}

#[derive(Debug, Clone)]
pub struct SynthFleet {
    pub hours: usize,
    /// Sorted by meter id (= generation order).
    pub profiles: Vec<CleanProfile>,
    pub attributes: Vec<HouseholdAttributes>,
    /// Hours capped at 29 kWh.
    pub clipped_high: u64,
    /// Hours raised to the 1 Wh resolution floor.
    pub clipped_low: u64,
}

impl SynthFleet {
    pub fn into_dataset(self, scheme: &CategoryScheme) -> Result<Dataset> {
        Dataset::new(self.hours, self.profiles, self.attributes, scheme)
    }
}

pub fn meter_id(index: usize) -> String {
    format!("s{index:07}")
}

/// Tables precomputed once per fleet.
struct Season {
    weekday: [f64; 24],
    weekend: [f64; 24],
    base_season: Vec<f64>,
    heat_season: Vec<f64>,
    weekend_day: Vec<bool>,
    holiday_day: Vec<bool>,
    start_cdf: [f64; 24],
    charger_cdf: Vec<f64>,
}

impl Season {
    fn new(cfg: &SynthConfig) -> Self {
        let days = CalendarYear::new(cfg.hours).days();
        let n = days as f64;
        let winter = |d: usize, phase: f64| (TAU * (d as f64 - phase) / n).cos();
        let mut start_cdf = [0.0; 24];
        let total: f64 = cfg.start_weights.iter().sum();
        let mut acc = 0.0;
        for (c, w) in start_cdf.iter_mut().zip(&cfg.start_weights) {
            acc += w / total;
            *c = acc;
        }
        let share_total: f64 = cfg.chargers.iter().map(|c| c.share).sum();
        let mut acc = 0.0;
        let charger_cdf = cfg
            .chargers
            .iter()
            .map(|c| {
                acc += c.share / share_total;
                acc
            })
            .collect();
        Season {
            weekday: cfg.shape.daily(false),
            weekend: cfg.shape.daily(true),
            base_season: (0..days).map(|d| 1.0 + cfg.seasonal_amplitude * winter(d, 15.0)).collect(),
            heat_season: (0..days)
                .map(|d| cfg.heat.offset_kwh + cfg.heat.amplitude_kwh * winter(d, cfg.heat.phase_day))
                .collect(),
            weekend_day: (0..days).map(|d| (d + cfg.first_weekday) % 7 >= 5).collect(),
            holiday_day: (0..days).map(|d| SUMMER_HOLIDAY.contains(&d)).collect(),
            start_cdf,
            charger_cdf,
        }
    }
}

fn pick(cdf: &[f64], u: f64) -> usize {
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

struct Household {
    values: Vec<Option<Reading>>,
    clipped_high: u64,
    clipped_low: u64,
}

fn generate_household(cfg: &SynthConfig, season: &Season, code: &CategoryCode, index: usize) -> Household {
    let mut rng = substream(cfg.seed, domain::SYNTH_HOUSEHOLD, index as u64);
    let hours = cfg.hours;
    let sigma_h = cfg.household_spread;
    let level = cfg.category_level(code) * (sigma_h * normal(&mut rng) - 0.5 * sigma_h * sigma_h).exp();
    let sigma = cfg.noise_scale;
    let mut load = vec![0.0f64; hours];
    for (h, v) in load.iter_mut().enumerate() {
        let d = h / 24;
        let shape = if season.weekend_day[d] { &season.weekend } else { &season.weekday };
        let noise = (sigma * normal(&mut rng) - 0.5 * sigma * sigma).exp();
        *v = level * shape[h % 24] * season.base_season[d] * noise;
    }
    if code.hp {
        let heat = &cfg.heat;
        let scale = (1.0 + heat.household_spread * normal(&mut rng)).max(0.2);
        for (h, v) in load.iter_mut().enumerate() {
            let mean = (scale * season.heat_season[h / 24]).max(0.0);
            // clamped symmetrically, so the add-on stays in [0, 2·mean]
            // without skewing its distribution
            let noise = (heat.noise_kwh * normal(&mut rng)).clamp(-mean, mean);
            *v += mean + noise;
        }
    }
    if code.ev && !cfg.chargers.is_empty() {
        let class = &cfg.chargers[pick(&season.charger_cdf, rng.random())];
        for d in 0..hours / 24 {
            let mut p = class.plugin_probability;
            if season.weekend_day[d] {
                p *= cfg.weekend_plugin_factor;
            }
            if season.holiday_day[d] {
                p *= class.holiday_dip;
            }
            // slightly more driving energy in the cold months
            p = (p * (1.0 + 0.5 * (season.base_season[d] - 1.0))).min(1.0);
            if rng.random::<f64>() >= p {
                continue;
            }
            let start = pick(&season.start_cdf, rng.random());
            let mut energy = class.battery_kwh * rng.random_range(0.15..0.55);
            // the session starts at a uniform minute inside the start hour
            let mut first = 1.0 - rng.random::<f64>();
            let mut h = d * 24 + start;
            while energy > 0.0 && h < hours {
                let block = (class.power_kw * first).min(energy);
                load[h] += block;
                energy -= block;
                first = 1.0;
                h += 1;
            }
        }
    }
    let mut out = Household {
        values: Vec::with_capacity(hours),
        clipped_high: 0,
        clipped_low: 0,
    };
    for v in load {
        if cfg.gap_rate > 0.0 && rng.random::<f64>() < cfg.gap_rate {
            out.values.push(None);
            continue;
        }
        let mut millis = (v * 1000.0).round() as i64;
        if millis > READING_CAP.0 {
            millis = READING_CAP.0;
            out.clipped_high += 1;
        } else if millis < 1 {
            millis = 1;
            out.clipped_low += 1;
        }
        out.values.push(Reading::new(Kwh(millis)));
    }
    out
}

/// Uniform draw from `(lower, upper]` at a resolution of `step`.
fn in_band(rng: &mut ChaCha8Rng, lower: f64, upper: f64, step: f64) -> f64 {
    // integer grid of `step`; band edges land exactly on it
    let per_unit = (1.0 / step).round();
    let lo = (lower * per_unit + 1e-6).floor() as i64;
    let hi = (upper * per_unit + 1e-6).floor() as i64;
    (rng.random_range(lo + 1..=hi.max(lo + 1)) as f64) / per_unit
}

fn band_limits(edges: &[f64], band: u8, floor: f64, ceiling: f64) -> (f64, f64) {
    let b = usize::from(band);
    let lower = if b >= 2 { edges[b - 2] } else { floor };
    let upper = if b <= edges.len() { edges[b - 1] } else { ceiling };
    (lower, upper)
}

fn generate_attributes(cfg: &SynthConfig, code: &CategoryCode, index: usize) -> HouseholdAttributes {
    let mut rng = substream(cfg.seed, domain::SYNTH_ATTRIBUTES, index as u64);
    let scheme = &cfg.scheme;
    let bounds = &scheme.occupancy_lower_bounds;
    let pos = bounds.iter().position(|&b| b == code.occupancy.lower).unwrap_or(0);
    let occupants = match bounds.get(pos + 1) {
        Some(&next) => rng.random_range(code.occupancy.lower..next),
        None => rng.random_range(code.occupancy.lower..=code.occupancy.lower + 2),
    };
    let (edges, floor, ceiling) = match code.dwelling {
        Dwelling::Apartment => (&scheme.apartment_area_edges, 25.0f64, 160.0),
        Dwelling::House => (&scheme.house_area_edges, 50.0, 320.0),
    };
    let (lo, hi) = band_limits(edges, code.area, floor.min(edges[0] - 1.0), ceiling);
    let area_sqm = in_band(&mut rng, lo, hi.max(lo + 1.0), 0.1);
    let (lo, hi) = band_limits(&scheme.income_edges, code.income, 0.0, 2_000_000.0);
    let income_dkk = in_band(&mut rng, lo.min(hi - 1.0), hi.max(lo + 1.0), 1.0);
    let rural_share = if code.hp { 0.4 } else { 0.15 };
    let children = if occupants >= 3 {
        rng.random_range(0..=(occupants - 2).min(3))
    } else {
        0
    };
    HouseholdAttributes {
        meter_id: meter_id(index),
        dwelling: code.dwelling,
        occupants,
        area_sqm,
        income_dkk,
        has_ev: code.ev,
        has_hp: code.hp,
        rural: Some(rng.random::<f64>() < rural_share),
        children: Some(children),
    }
}

/// Generates every household of the configuration.
pub fn generate_fleet(cfg: &SynthConfig) -> Result<SynthFleet> {
    cfg.validate()?;
    let season = Season::new(cfg);
    let jobs: Vec<(usize, CategoryCode)> = cfg
        .categories
        .iter()
        .flat_map(|(c, n)| std::iter::repeat_n(*c, *n))
        .enumerate()
        .collect();
    let generated: Vec<(CleanProfile, HouseholdAttributes, u64, u64)> = jobs
        .par_iter()
        .map(|&(i, c)| {
            let hh = generate_household(cfg, &season, &c, i);
            let attrs = generate_attributes(cfg, &c, i);
            (
                CleanProfile::from_values(meter_id(i), hh.values),
                attrs,
                hh.clipped_high,
                hh.clipped_low,
            )
        })
        .collect();
    let mut fleet = SynthFleet {
        hours: cfg.hours,
        profiles: Vec::with_capacity(generated.len()),
        attributes: Vec::with_capacity(generated.len()),
        clipped_high: 0,
        clipped_low: 0,
    };
    for (p, a, hi, lo) in generated {
        fleet.profiles.push(p);
        fleet.attributes.push(a);
        fleet.clipped_high += hi;
        fleet.clipped_low += lo;
    }
    Ok(fleet)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvSkew {
    pub category: CategoryCode,
    pub hour: usize,
    pub mean: f64,
    pub median: f64,
    pub third_moment: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HpSymmetry {
    pub category: CategoryCode,
    /// Largest `|mean − median| / std` over the day's hours.
    pub max_gap_ratio: f64,
    pub worst_hour: usize,
    /// January mean over July mean.
    pub winter_summer_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvMaxima {
    pub category: CategoryCode,
    /// Households per 1 kWh bin of their annual maximum.
    pub histogram: Vec<u32>,
    /// Bin centres (kWh) of local histogram maxima holding ≥ 5% of households.
    pub modes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineExceedance {
    pub category: CategoryCode,
    pub threshold_kwh: f64,
    pub year_average: Option<f64>,
}

/// Qualitative signature check of a (synthetic) dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub day: usize,
    pub ev_evening: Vec<EvSkew>,
    pub hp_symmetry: Vec<HpSymmetry>,
    pub ev_maxima: Vec<EvMaxima>,
    pub non_ev_exceedance: Vec<BaselineExceedance>,
}

/// Clock hours checked for the EV evening skew.
pub const EVENING: std::ops::RangeInclusive<usize> = 17..=20;

impl CalibrationReport {
    pub fn ev_skew_positive(&self) -> bool {
        !self.ev_evening.is_empty()
            && self
                .ev_evening
                .iter()
                .all(|e| e.mean > e.median && e.third_moment.is_some_and(|m| m > 0.0))
    }

    pub fn hp_symmetric(&self, tolerance: f64) -> bool {
        !self.hp_symmetry.is_empty() && self.hp_symmetry.iter().all(|h| h.max_gap_ratio <= tolerance)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("calibration serializes")
    }
}

fn month_mean(profiles: &[&CleanProfile], calendar: CalendarYear, month: usize) -> Option<f64> {
    let hours = calendar.month_days(month);
    let acc: StreamAccumulator = profiles
        .iter()
        .flat_map(|p| p.values[hours.start * 24..hours.end * 24].iter().flatten())
        .map(|r| r.kwh())
        .collect();
    acc.mean()
}

/// Evaluates the calibration signatures on `day` (0-based) of `dataset`.
pub fn calibration_report(dataset: &Dataset, day: usize) -> Result<CalibrationReport> {
    if (day + 1) * 24 > dataset.hours {
        return Err(Error::domain(format!("day {day} outside the year")));
    }
    let calendar = CalendarYear::new(dataset.hours);
    let mut report = CalibrationReport {
        day,
        ev_evening: Vec::new(),
        hp_symmetry: Vec::new(),
        ev_maxima: Vec::new(),
        non_ev_exceedance: Vec::new(),
    };
    let by_category: BTreeMap<CategoryCode, Vec<&CleanProfile>> = dataset.by_category();
    for (code, profiles) in &by_category {
        if profiles.len() < 3 {
            continue;
        }
        let sample_at = |clock: usize| -> Vec<f64> {
            hour_sample(profiles, day * 24 + clock)
                .into_iter()
                .map(|m| f64::from(m) / 1000.0)
                .collect()
        };
        if code.ev {
            for clock in EVENING {
                let sample = sample_at(clock);
                let skew = skewness_diagnostic(&sample)?;
                let mut sorted = sample.clone();
                sorted.sort_by(f64::total_cmp);
                let median = nearest_rank(&sorted, 1, 2).expect("non-empty");
                report.ev_evening.push(EvSkew {
                    category: *code,
                    hour: clock,
                    mean: median + skew.mean_minus_median,
                    median,
                    third_moment: skew.third_moment,
                });
            }
            let mut histogram = vec![0u32; 30];
            for p in profiles {
                if let Some(m) = p.max_reading() {
                    histogram[(m.millis() as usize / 1000).min(29)] += 1;
                }
            }
            let floor = (profiles.len() as f64 * 0.05).ceil() as u32;
            let modes = (0..histogram.len())
                .filter(|&i| {
                    let c = histogram[i];
                    c >= floor
                        && (i == 0 || histogram[i - 1] < c)
                        && (i + 1 == histogram.len() || histogram[i + 1] <= c)
                })
                .map(|i| i as f64 + 0.5)
                .collect();
            report.ev_maxima.push(EvMaxima {
                category: *code,
                histogram,
                modes,
            });
        } else {
            let series = exceedance_series(profiles, *code, Kwh(3000))?;
            report.non_ev_exceedance.push(BaselineExceedance {
                category: *code,
                threshold_kwh: 3.0,
                year_average: series.year_average(),
            });
        }
        if code.hp {
            let mut worst = (0.0f64, 0usize);
            for clock in 0..24 {
                let sample = sample_at(clock);
                let skew = skewness_diagnostic(&sample)?;
                let n = sample.len() as f64;
                let mean = sample.iter().sum::<f64>() / n;
                let std = (sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                let ratio = if std > 0.0 { skew.mean_minus_median.abs() / std } else { 0.0 };
                if ratio > worst.0 {
                    worst = (ratio, clock);
                }
            }
            let winter_summer_ratio = match (month_mean(profiles, calendar, 0), month_mean(profiles, calendar, 6)) {
                (Some(w), Some(s)) if s > 0.0 => Some(w / s),
                _ => None,
            };
            report.hp_symmetry.push(HpSymmetry {
                category: *code,
                max_gap_ratio: worst.0,
                worst_hour: worst.1,
                winter_summer_ratio,
            });
        }
    }
    Ok(report)
}
