// Copyright 2026 The loadprof Authors
// SPDX-License-Identifier: Apache-2.0

//! Line-oriented `key = value` configuration.
//!
//! `#` starts a comment, blank lines are ignored, and every key may appear
//! once. Keys unknown to every consumer are reported as format errors with
//! their line, so typos do not pass silently. Keys are listed in the README.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::coincidence::{DEFAULT_THRESHOLDS, SUMMER_HOLIDAY};
use crate::error::{Error, Result};
use crate::ingest::DEFAULT_HOURS;
use crate::kwh::Kwh;
use crate::ldc::Unit;
use crate::synth::{ChargerClass, SynthConfig};
use crate::taxonomy::{CategoryCode, CategoryScheme};
use crate::welch::Replacement;

#[derive(Debug)]
pub struct KeyValues {
    context: String,
    entries: BTreeMap<String, (String, usize)>,
    used: RefCell<BTreeSet<String>>,
}

impl KeyValues {
    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::format(context, line, "expected `key = value`"));
            };
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(Error::format(context, line, format!("invalid key `{key}`")));
            }
            if entries
                .insert(key.to_string(), (value.trim().to_string(), line))
                .is_some()
            {
                return Err(Error::format(context, line, format!("key `{key}` repeated")));
            }
        }
        Ok(KeyValues {
            context: context.to_string(),
            entries,
            used: RefCell::new(BTreeSet::new()),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        KeyValues::parse(&text, &path.display().to_string())
    }

    pub fn empty() -> Self {
        KeyValues::parse("", "<none>").expect("empty config parses")
    }

    fn raw(&self, key: &str) -> Option<&(String, usize)> {
        let hit = self.entries.get(key);
        if hit.is_some() {
            self.used.borrow_mut().insert(key.to_string());
        }
        hit
    }

    fn bad(&self, line: usize, key: &str, value: &str, what: &str) -> Error {
        Error::format(&self.context, line, format!("`{key} = {value}`: expected {what}"))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|_| self.bad(*line, key, v, std::any::type_name::<T>())),
        }
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|item| item.trim().parse())
                .collect::<std::result::Result<Vec<T>, _>>()
                .map(Some)
                .map_err(|_| self.bad(*line, key, v, "a comma-separated list")),
        }
    }

    fn set<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<()> {
        if let Some(v) = self.get(key)? {
            *slot = v;
        }
        Ok(())
    }

    /// Keys starting with `prefix`, with the prefix removed.
    fn with_prefix(&self, prefix: &str) -> Vec<(String, String, usize)> {
        let hits: Vec<_> = self
            .entries
            .iter()
            .filter_map(|(k, (v, line))| k.strip_prefix(prefix).map(|rest| (rest.to_string(), v.clone(), *line)))
            .collect();
        let mut used = self.used.borrow_mut();
        for (rest, _, _) in &hits {
            used.insert(format!("{prefix}{rest}"));
        }
        hits
    }

    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|(_, line)| *line)
    }

    pub fn context(&self) -> &str {
        &self.context
    }

    /// Fails on the first key no consumer asked for.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        match self.entries.iter().find(|(k, _)| !used.contains(*k)) {
            Some((k, (_, line))) => Err(Error::format(&self.context, *line, format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }
}

/// How the resampling protocol forms its observation pools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResampleUnit {
    /// Every (household, peak hour) value.
    Observations,
    /// One peak-hour mean per household.
    HouseholdMeans,
}

impl FromStr for ResampleUnit {
    type Err = ();
    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "observations" => Ok(ResampleUnit::Observations),
            "household-means" => Ok(ResampleUnit::HouseholdMeans),
            _ => Err(()),
        }
    }
}

impl FromStr for Replacement {
    type Err = ();
    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "with" => Ok(Replacement::With),
            "without" => Ok(Replacement::Without),
            _ => Err(()),
        }
    }
}

impl FromStr for Unit {
    type Err = ();
    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "kwh" => Ok(Unit::Kwh),
            "mwh" => Ok(Unit::Mwh),
            _ => Err(()),
        }
    }
}

/// Analysis settings shared by the subcommands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub readings: Option<PathBuf>,
    pub attributes: Option<PathBuf>,
    pub gross: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub hours: usize,
    #[serde(skip)]
    pub scheme: CategoryScheme,
    pub peak_fractions: Vec<f64>,
    pub alpha: f64,
    pub repetitions: usize,
    pub seed: u64,
    pub replacement: Replacement,
    pub resample_unit: ResampleUnit,
    /// 0-based day of year for the distribution bands (4 = 5 January).
    pub band_day: usize,
    pub band_categories: Vec<CategoryCode>,
    pub thresholds: Vec<Kwh>,
    pub holiday_days: [usize; 2],
    pub base_category: CategoryCode,
    pub ev_category: CategoryCode,
    pub hp_category: CategoryCode,
    pub window_fraction: f64,
    pub unit: Unit,
    pub workers: Option<usize>,
}

fn code(s: &str) -> CategoryCode {
    s.parse().expect("built-in category code")
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            readings: None,
            attributes: None,
            gross: None,
            out_dir: None,
            hours: DEFAULT_HOURS,
            scheme: CategoryScheme::default(),
            peak_fractions: vec![0.2, 0.05, 0.01],
            alpha: 0.05,
            repetitions: 50,
            seed: 7,
            replacement: Replacement::With,
            resample_unit: ResampleUnit::Observations,
            band_day: 4,
            band_categories: vec![
                code("H_P3_A1_€3_EV0_HP0"),
                code("H_P3_A3_€3_EV0_HP0"),
                code("H_P3_A3_€3_EV1_HP0"),
                code("H_P3_A3_€3_EV0_HP1"),
            ],
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            holiday_days: [*SUMMER_HOLIDAY.start(), *SUMMER_HOLIDAY.end()],
            base_category: code("H_P3_A3_€3_EV0_HP0"),
            ev_category: code("H_P3_A3_€3_EV1_HP0"),
            hp_category: code("H_P3_A3_€3_EV0_HP1"),
            window_fraction: 0.2,
            unit: Unit::Kwh,
            workers: None,
        }
    }
}

fn parse_holiday(s: &str) -> Option<[usize; 2]> {
    let (a, b) = s.split_once('-')?;
    let (a, b) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
    (a <= b).then_some([a, b])
}

impl RunConfig {
    /// Applies file values; relative paths resolve against `base_dir`.
    pub fn apply(&mut self, kv: &KeyValues, base_dir: &Path) -> Result<()> {
        let path = |key: &str| -> Result<Option<PathBuf>> {
            Ok(kv.get::<String>(key)?.map(|p| base_dir.join(p)))
        };
        if let Some(p) = path("readings")? {
            self.readings = Some(p);
        }
        if let Some(p) = path("attributes")? {
            self.attributes = Some(p);
        }
        if let Some(p) = path("gross")? {
            self.gross = Some(p);
        }
        if let Some(p) = path("out_dir")? {
            self.out_dir = Some(p);
        }
        kv.set("hours", &mut self.hours)?;
        let s = &mut self.scheme;
        if let Some(v) = kv.get_list("house_area_edges")? {
            s.house_area_edges = v;
        }
        if let Some(v) = kv.get_list("apartment_area_edges")? {
            s.apartment_area_edges = v;
        }
        if let Some(v) = kv.get_list("income_edges")? {
            s.income_edges = v;
        }
        if let Some(v) = kv.get_list("occupancy_bounds")? {
            s.occupancy_lower_bounds = v;
        }
        kv.set("privacy_k", &mut s.privacy_k)?;
        kv.set("exclude_ev_and_hp", &mut s.exclude_ev_and_hp)?;
        if let Some(v) = kv.get_list("peak_fractions")? {
            self.peak_fractions = v;
        }
        kv.set("alpha", &mut self.alpha)?;
        kv.set("repetitions", &mut self.repetitions)?;
        kv.set("seed", &mut self.seed)?;
        kv.set("replacement", &mut self.replacement)?;
        kv.set("resample_unit", &mut self.resample_unit)?;
        kv.set("band_day", &mut self.band_day)?;
        if let Some(v) = kv.get_list("band_categories")? {
            self.band_categories = v;
        }
        if let Some(v) = kv.get_list::<Kwh>("thresholds_kwh")? {
            self.thresholds = v;
        }
        if let Some(v) = kv.get::<String>("holiday_days")? {
            let line = kv.line_of("holiday_days").unwrap_or(0);
            self.holiday_days = parse_holiday(&v)
                .ok_or_else(|| Error::format(kv.context(), line, "holiday_days expects `first-last`"))?;
        }
        kv.set("base_category", &mut self.base_category)?;
        kv.set("ev_category", &mut self.ev_category)?;
        kv.set("hp_category", &mut self.hp_category)?;
        kv.set("window_fraction", &mut self.window_fraction)?;
        kv.set("unit", &mut self.unit)?;
        if let Some(w) = kv.get("workers")? {
            self.workers = Some(w);
        }
        Ok(())
    }

    pub fn holiday(&self) -> RangeInclusive<usize> {
        self.holiday_days[0]..=self.holiday_days[1]
    }

    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        let in_unit = |f: f64| f > 0.0 && f < 1.0;
        if self.peak_fractions.is_empty() || !self.peak_fractions.iter().all(|&f| in_unit(f)) {
            return Err(Error::Config("peak fractions must lie in (0, 1)".into()));
        }
        if !in_unit(self.alpha) || !in_unit(self.window_fraction) {
            return Err(Error::Config("alpha and window fraction must lie in (0, 1)".into()));
        }
        if self.repetitions < 1 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.thresholds.is_empty() || self.thresholds.iter().any(|t| t.0 <= 0) {
            return Err(Error::Config("thresholds must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if (self.band_day + 1) * 24 > self.hours {
            return Err(Error::Config(format!("band day {} outside the year", self.band_day)));
        }
        Ok(())
    }
}

fn parse_charger(s: &str) -> Option<ChargerClass> {
    let parts: Vec<f64> = s.split(':').map(|p| p.trim().parse().ok()).collect::<Option<_>>()?;
    match parts.as_slice() {
        &[power_kw, battery_kwh, share, plugin_probability, holiday_dip] => Some(ChargerClass {
            power_kw,
            battery_kwh,
            share,
            plugin_probability,
            holiday_dip,
        }),
        _ => None,
    }
}

impl SynthConfig {
    /// Applies the synthetic-fleet keys. `households.<code> = n` entries
    /// replace the default category list; `households_total` rescales it.
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        kv.set("hours", &mut self.hours)?;
        kv.set("seed", &mut self.seed)?;
        let listed = kv.with_prefix("households.");
        if !listed.is_empty() {
            self.categories.clear();
            for (code, value, line) in listed {
                let c: CategoryCode = code
                    .parse()
                    .map_err(|e: crate::taxonomy::ParseCodeError| Error::format(kv.context(), line, e.to_string()))?;
                let n: usize = value
                    .parse()
                    .map_err(|_| Error::format(kv.context(), line, "household count expected"))?;
                self.categories.push((c, n));
            }
        }
        if let Some(total) = kv.get::<usize>("households_total")? {
            *self = std::mem::take(self).scaled_to(total);
        }
        let sh = &mut self.shape;
        kv.set("morning_hour", &mut sh.morning_hour)?;
        kv.set("morning_magnitude", &mut sh.morning_magnitude)?;
        kv.set("evening_hour", &mut sh.evening_hour)?;
        kv.set("evening_magnitude", &mut sh.evening_magnitude)?;
        kv.set("overnight_floor", &mut sh.overnight_floor)?;
        kv.set("daytime_magnitude", &mut sh.daytime_magnitude)?;
        kv.set("weekend_factor", &mut sh.weekend_factor)?;
        kv.set("weekend_morning_shift", &mut sh.weekend_morning_shift)?;
        kv.set("base_level_kwh", &mut self.base_level_kwh)?;
        kv.set("seasonal_amplitude", &mut self.seasonal_amplitude)?;
        kv.set("noise_scale", &mut self.noise_scale)?;
        kv.set("household_spread", &mut self.household_spread)?;
        kv.set("first_weekday", &mut self.first_weekday)?;
        kv.set("gap_rate", &mut self.gap_rate)?;
        kv.set("weekend_plugin_factor", &mut self.weekend_plugin_factor)?;
        if let Some(v) = kv.get::<String>("charger_classes")? {
            let line = kv.line_of("charger_classes").unwrap_or(0);
            self.chargers = v
                .split(',')
                .map(parse_charger)
                .collect::<Option<_>>()
                .ok_or_else(|| {
                    Error::format(kv.context(), line, "charger_classes expects `power:battery:share:plugin:dip, ...`")
                })?;
        }
        if let Some(w) = kv.get_list::<f64>("ev_start_weights")? {
            let line = kv.line_of("ev_start_weights").unwrap_or(0);
            self.start_weights = w
                .try_into()
                .map_err(|_| Error::format(kv.context(), line, "ev_start_weights needs 24 values"))?;
        }
        let h = &mut self.heat;
        kv.set("heat_offset_kwh", &mut h.offset_kwh)?;
        kv.set("heat_amplitude_kwh", &mut h.amplitude_kwh)?;
        kv.set("heat_phase_day", &mut h.phase_day)?;
        kv.set("heat_noise_kwh", &mut h.noise_kwh)?;
        kv.set("heat_household_spread", &mut h.household_spread)?;
        Ok(())
    }
}

/// Configuration file combining run and synthetic-fleet settings.
#[derive(Default)]
pub struct ConfigFile {
    pub run: RunConfig,
    pub synth: SynthConfig,
}

impl ConfigFile {
    pub fn from_key_values(kv: &KeyValues, base_dir: &Path) -> Result<Self> {
        let mut run = RunConfig::default();
        run.apply(kv, base_dir)?;
        let mut synth = SynthConfig {
            hours: run.hours,
            seed: run.seed,
            scheme: run.scheme.clone(),
            ..SynthConfig::default()
        };
        synth.apply(kv)?;
        kv.finish()?;
        Ok(ConfigFile { run, synth })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let kv = KeyValues::load(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        ConfigFile::from_key_values(&kv, base)
    }
}
