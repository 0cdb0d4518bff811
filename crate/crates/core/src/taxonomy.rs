// Copyright 2026 The loadprof Authors
// SPDX-License-Identifier: Apache-2.0

//! Consumer categories.
//!
//! A household is classified by dwelling type, occupancy, floor area,
//! income, EV ownership and heat-pump ownership. The canonical code reads
//! `H_P3_A3_€3_EV1_HP0`. Band upper bounds are inclusive: with house area
//! edges `[110, 146]`, 110 m² is A1 and 110.5 m² is A2.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub const ATTRIBUTES_HEADER: &str = "meter_id,dwelling,occupants,area_sqm,income_dkk,ev,hp";
pub const ATTRIBUTES_HEADER_EXTENDED: &str =
    "meter_id,dwelling,occupants,area_sqm,income_dkk,ev,hp,rural,children";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dwelling {
    Apartment,
    House,
}

impl Dwelling {
    /// Spelling used inside category codes.
    pub fn code(self) -> &'static str {
        match self {
            Dwelling::Apartment => "Ap",
            Dwelling::House => "H",
        }
    }

    /// Spelling used in the attributes file.
    pub fn attribute(self) -> &'static str {
        match self {
            Dwelling::Apartment => "AP",
            Dwelling::House => "H",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdAttributes {
    pub meter_id: String,
    pub dwelling: Dwelling,
    pub occupants: u32,
    pub area_sqm: f64,
    pub income_dkk: f64,
    pub has_ev: bool,
    pub has_hp: bool,
    pub rural: Option<bool>,
    pub children: Option<u32>,
}

impl HouseholdAttributes {
    pub fn validate(&self) -> Result<()> {
        if self.occupants < 1 {
            return Err(Error::domain(format!("{}: occupants must be at least 1", self.meter_id)));
        }
        if !(self.area_sqm > 0.0 && self.area_sqm.is_finite()) {
            return Err(Error::domain(format!("{}: area must be positive", self.meter_id)));
        }
        if !(self.income_dkk >= 0.0 && self.income_dkk.is_finite()) {
            return Err(Error::domain(format!("{}: income must be non-negative", self.meter_id)));
        }
        Ok(())
    }
}

/// Occupancy band label: `P3` covers 3 up to the next band's lower bound,
/// `P5+` is the open-ended last band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occupancy {
    pub lower: u32,
    pub open: bool,
}

impl fmt::Display for Occupancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}{}", self.lower, if self.open { "+" } else { "" })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CategoryCode {
    pub dwelling: Dwelling,
    pub occupancy: Occupancy,
    /// 1-based area band.
    pub area: u8,
    /// 1-based income band.
    pub income: u8,
    pub ev: bool,
    pub hp: bool,
}

impl CategoryCode {
    /// Same code with a different EV flag.
    pub fn with_ev(self, ev: bool) -> Self {
        CategoryCode { ev, ..self }
    }

    pub fn with_hp(self, hp: bool) -> Self {
        CategoryCode { hp, ..self }
    }

    /// ASCII form for file names: `€` becomes `EUR`.
    pub fn file_stem(&self) -> String {
        self.to_string().replace('€', "EUR")
    }
}

impl fmt::Display for CategoryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}_{}_A{}_€{}_EV{}_HP{}",
            self.dwelling.code(),
            self.occupancy,
            self.area,
            self.income,
            u8::from(self.ev),
            u8::from(self.hp)
        )
    }
}

impl Serialize for CategoryCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseCodeError(pub String);

impl fmt::Display for ParseCodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid category code `{}`", self.0)
    }
}

impl std::error::Error for ParseCodeError {}

impl FromStr for CategoryCode {
    type Err = ParseCodeError;

    /// Accepts the canonical form and the ASCII `EUR` spelling.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let err = || ParseCodeError(s.to_string());
        let parts: Vec<&str> = s.split('_').collect();
        let [dw, p, a, inc, ev, hp] = parts.as_slice() else {
            return Err(err());
        };
        let dwelling = match *dw {
            "Ap" => Dwelling::Apartment,
            "H" => Dwelling::House,
            _ => return Err(err()),
        };
        let p = p.strip_prefix('P').ok_or_else(err)?;
        let (p, open) = match p.strip_suffix('+') {
            Some(rest) => (rest, true),
            None => (p, false),
        };
        let lower = p.parse::<u32>().map_err(|_| err())?;
        let band = |text: &str, prefix: &str| -> std::result::Result<u8, ParseCodeError> {
            let digits = text.strip_prefix(prefix).ok_or_else(err)?;
            match digits.parse::<u8>() {
                Ok(b) if b >= 1 && !digits.starts_with('+') => Ok(b),
                _ => Err(err()),
            }
        };
        let area = band(a, "A")?;
        let income = band(inc, "€").or_else(|_| band(inc, "EUR"))?;
        let flag = |text: &str, prefix: &str| match text.strip_prefix(prefix) {
            Some("0") => Ok(false),
            Some("1") => Ok(true),
            _ => Err(err()),
        };
        Ok(CategoryCode {
            dwelling,
            occupancy: Occupancy { lower, open },
            area,
            income,
            ev: flag(ev, "EV")?,
            hp: flag(hp, "HP")?,
        })
    }
}

/// Band edges and grouping rules.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryScheme {
    pub house_area_edges: Vec<f64>,
    pub apartment_area_edges: Vec<f64>,
    pub income_edges: Vec<f64>,
    /// Lower bound of each occupancy band, starting at 1.
    pub occupancy_lower_bounds: Vec<u32>,
    pub dwellings: Vec<Dwelling>,
    pub ev_levels: Vec<bool>,
    pub hp_levels: Vec<bool>,
    /// Drop households owning both an EV and a heat pump.
    pub exclude_ev_and_hp: bool,
    pub privacy_k: usize,
}

impl Default for CategoryScheme {
    fn default() -> Self {
        CategoryScheme {
            house_area_edges: vec![110.0, 146.0],
            apartment_area_edges: vec![66.0, 85.0],
            income_edges: vec![240_260.0, 449_097.0],
            occupancy_lower_bounds: vec![1, 2, 3, 5],
            dwellings: vec![Dwelling::Apartment, Dwelling::House],
            ev_levels: vec![false, true],
            hp_levels: vec![false, true],
            exclude_ev_and_hp: true,
            privacy_k: 20,
        }
    }
}

fn strictly_increasing<T: PartialOrd>(values: &[T]) -> bool {
    values.windows(2).all(|w| w[0] < w[1])
}

/// 1-based band for `value` with inclusive upper edges.
fn band_of(value: f64, edges: &[f64]) -> u8 {
    (edges.iter().take_while(|&&e| value > e).count() + 1) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exclusion {
    /// Owns both an EV and a heat pump.
    EvAndHp,
    /// Dwelling or technology level not covered by the scheme.
    OutOfScheme,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assignment {
    Code(CategoryCode),
    Excluded(Exclusion),
}

impl CategoryScheme {
    pub fn validate(&self) -> Result<()> {
        let edge_sets = [
            ("house area", &self.house_area_edges),
            ("apartment area", &self.apartment_area_edges),
            ("income", &self.income_edges),
        ];
        for (name, edges) in edge_sets {
            if !strictly_increasing(edges) || edges.iter().any(|e| !e.is_finite()) {
                return Err(Error::Config(format!("{name} edges must be strictly increasing")));
            }
            if edges.len() > 8 {
                return Err(Error::Config(format!("{name}: at most 9 bands are supported")));
            }
        }
        if self.occupancy_lower_bounds.first() != Some(&1)
            || !strictly_increasing(&self.occupancy_lower_bounds)
        {
            return Err(Error::Config(
                "occupancy bands must start at 1 and increase strictly".into(),
            ));
        }
        if self.dwellings.is_empty() || self.ev_levels.is_empty() || self.hp_levels.is_empty() {
            return Err(Error::Config("dwelling and technology levels must be non-empty".into()));
        }
        if self.privacy_k < 1 {
            return Err(Error::Config("privacy threshold must be at least 1".into()));
        }
        Ok(())
    }

    fn area_edges(&self, dwelling: Dwelling) -> &[f64] {
        match dwelling {
            Dwelling::Apartment => &self.apartment_area_edges,
            Dwelling::House => &self.house_area_edges,
        }
    }

    fn occupancy_of(&self, occupants: u32) -> Occupancy {
        let bounds = &self.occupancy_lower_bounds;
        let idx = bounds.iter().rposition(|&lo| occupants >= lo).unwrap_or(0);
        Occupancy {
            lower: bounds[idx],
            open: idx + 1 == bounds.len() && idx > 0,
        }
    }

    fn occupancy_bands(&self) -> Vec<Occupancy> {
        let bounds = &self.occupancy_lower_bounds;
        (0..bounds.len())
            .map(|i| self.occupancy_of(bounds[i]))
            .collect()
    }

    /// Classifies one household.
    pub fn assign(&self, attrs: &HouseholdAttributes) -> Assignment {
        if self.exclude_ev_and_hp && attrs.has_ev && attrs.has_hp {
            return Assignment::Excluded(Exclusion::EvAndHp);
        }
        if !self.dwellings.contains(&attrs.dwelling)
            || !self.ev_levels.contains(&attrs.has_ev)
            || !self.hp_levels.contains(&attrs.has_hp)
        {
            return Assignment::Excluded(Exclusion::OutOfScheme);
        }
        Assignment::Code(CategoryCode {
            dwelling: attrs.dwelling,
            occupancy: self.occupancy_of(attrs.occupants),
            area: band_of(attrs.area_sqm, self.area_edges(attrs.dwelling)),
            income: band_of(attrs.income_dkk, &self.income_edges),
            ev: attrs.has_ev,
            hp: attrs.has_hp,
        })
    }

    /// Every code the scheme can produce, sorted by canonical string.
    pub fn enumerate_codes(&self) -> Vec<CategoryCode> {
        let mut codes = Vec::new();
        for &dwelling in &self.dwellings {
            let areas = self.area_edges(dwelling).len() + 1;
            for occupancy in self.occupancy_bands() {
                for area in 1..=areas as u8 {
                    for income in 1..=(self.income_edges.len() + 1) as u8 {
                        for &ev in &self.ev_levels {
                            for &hp in &self.hp_levels {
                                if self.exclude_ev_and_hp && ev && hp {
                                    continue;
                                }
                                codes.push(CategoryCode {
                                    dwelling,
                                    occupancy,
                                    area,
                                    income,
                                    ev,
                                    hp,
                                });
                            }
                        }
                    }
                }
            }
        }
        codes.sort_by_cached_key(|c| c.to_string());
        codes.dedup();
        codes
    }
}

/// Free function form of [`CategoryScheme::assign`].
pub fn assign_category(attrs: &HouseholdAttributes, scheme: &CategoryScheme) -> Assignment {
    scheme.assign(attrs)
}

/// Composition shares of a category, computed over members with the
/// attribute present.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CategoryShares {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rural: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub urban: Option<f64>,
    /// Share by exact occupant count.
    pub occupants: BTreeMap<u32, f64>,
    /// Share by number of children; the last key collects 3 or more.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub children: BTreeMap<u32, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CategoryEntry {
    pub count: usize,
    pub members: Vec<String>,
    pub shares: CategoryShares,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CategoryTable {
    pub categories: BTreeMap<CategoryCode, CategoryEntry>,
    /// Households dropped by the exclusion rule or outside the scheme.
    pub excluded: Vec<String>,
    /// Households in categories removed by the privacy filter.
    pub suppressed: Vec<String>,
}

impl CategoryTable {
    pub fn total_households(&self) -> usize {
        self.categories.values().map(|e| e.count).sum::<usize>()
            + self.excluded.len()
            + self.suppressed.len()
    }

    pub fn count(&self, code: &CategoryCode) -> usize {
        self.categories.get(code).map_or(0, |e| e.count)
    }

    pub fn members(&self, code: &CategoryCode) -> &[String] {
        self.categories.get(code).map_or(&[], |e| &e.members)
    }

    /// JSON object keyed by canonical code.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}

fn shares_of(members: &[&HouseholdAttributes]) -> CategoryShares {
    let mut shares = CategoryShares::default();
    let n = members.len() as f64;
    if n == 0.0 {
        return shares;
    }
    let located: Vec<bool> = members.iter().filter_map(|a| a.rural).collect();
    if !located.is_empty() {
        let rural = located.iter().filter(|&&r| r).count() as f64 / located.len() as f64;
        shares.rural = Some(rural);
        shares.urban = Some(1.0 - rural);
    }
    for a in members {
        *shares.occupants.entry(a.occupants).or_insert(0.0) += 1.0 / n;
    }
    let children: Vec<u32> = members.iter().filter_map(|a| a.children).collect();
    for c in &children {
        *shares.children.entry((*c).min(3)).or_insert(0.0) += 1.0 / children.len() as f64;
    }
    shares
}

/// Partitions households into categories. Members are kept in input order.
pub fn build_category_table(
    attrs: &[HouseholdAttributes],
    scheme: &CategoryScheme,
) -> Result<CategoryTable> {
    let mut ids = HashSet::with_capacity(attrs.len());
    for a in attrs {
        if !ids.insert(a.meter_id.as_str()) {
            return Err(Error::domain(format!("duplicate meter_id `{}` in attributes", a.meter_id)));
        }
    }
    let assignments: Vec<Assignment> = attrs.par_iter().map(|a| scheme.assign(a)).collect();

    let mut grouped: BTreeMap<CategoryCode, Vec<&HouseholdAttributes>> = BTreeMap::new();
    let mut table = CategoryTable::default();
    for (a, assignment) in attrs.iter().zip(assignments) {
        match assignment {
            Assignment::Code(code) => grouped.entry(code).or_default().push(a),
            Assignment::Excluded(_) => table.excluded.push(a.meter_id.clone()),
        }
    }
    for (code, members) in grouped {
        table.categories.insert(
            code,
            CategoryEntry {
                count: members.len(),
                shares: shares_of(&members),
                members: members.iter().map(|a| a.meter_id.clone()).collect(),
            },
        );
    }
    Ok(table)
}

/// Removes categories with fewer than `k` members; their households are
/// listed as suppressed rather than reassigned.
pub fn apply_privacy_filter(mut table: CategoryTable, k: usize) -> CategoryTable {
    let k = k.max(1);
    let small: Vec<CategoryCode> = table
        .categories
        .iter()
        .filter(|(_, e)| e.count < k)
        .map(|(c, _)| *c)
        .collect();
    for code in small {
        if let Some(entry) = table.categories.remove(&code) {
            table.suppressed.extend(entry.members);
        }
    }
    table
}

fn parse_flag(text: &str) -> Option<bool> {
    match text {
        "0" => Some(false),
        "1" => Some(true),
        _ => None,
    }
}

/// Reads the attributes CSV. Malformed lines are fatal.
pub fn read_attributes<R: BufRead>(reader: R, context: &str) -> Result<Vec<HouseholdAttributes>> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| Error::io(context, e))?,
        None => return Err(Error::format(context, 1, "missing header")),
    };
    let header = header.trim_start_matches('\u{feff}').trim();
    let extended = match header {
        ATTRIBUTES_HEADER => false,
        ATTRIBUTES_HEADER_EXTENDED => true,
        other => {
            return Err(Error::format(
                context,
                1,
                format!("expected header `{ATTRIBUTES_HEADER}[,rural,children]`, found `{other}`"),
            ))
        }
    };
    let mut out = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(context, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::format(context, line_no, msg.to_string());
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let expected = if extended { 9 } else { 7 };
        if f.len() != expected {
            return Err(bad(&format!("expected {expected} fields")));
        }
        let dwelling = match f[1] {
            "AP" => Dwelling::Apartment,
            "H" => Dwelling::House,
            _ => return Err(bad("dwelling must be AP or H")),
        };
        let attrs = HouseholdAttributes {
            meter_id: f[0].to_string(),
            dwelling,
            occupants: f[2].parse().map_err(|_| bad("bad occupants"))?,
            area_sqm: f[3].parse().map_err(|_| bad("bad area_sqm"))?,
            income_dkk: f[4].parse().map_err(|_| bad("bad income_dkk"))?,
            has_ev: parse_flag(f[5]).ok_or_else(|| bad("ev must be 0 or 1"))?,
            has_hp: parse_flag(f[6]).ok_or_else(|| bad("hp must be 0 or 1"))?,
            rural: if extended && !f[7].is_empty() {
                Some(parse_flag(f[7]).ok_or_else(|| bad("rural must be 0 or 1"))?)
            } else {
                None
            },
            children: if extended && !f[8].is_empty() {
                Some(f[8].parse().map_err(|_| bad("bad children"))?)
            } else {
                None
            },
        };
        if attrs.meter_id.is_empty() {
            return Err(bad("empty meter_id"));
        }
        attrs
            .validate()
            .map_err(|e| Error::format(context, line_no, e.to_string()))?;
        out.push(attrs);
    }
    Ok(out)
}

/// Writes the extended attributes CSV.
pub fn write_attributes<W: Write>(mut out: W, attrs: &[HouseholdAttributes]) -> std::io::Result<()> {
    writeln!(out, "{ATTRIBUTES_HEADER_EXTENDED}")?;
    for a in attrs {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            a.meter_id,
            a.dwelling.attribute(),
            a.occupants,
            a.area_sqm,
            a.income_dkk,
            u8::from(a.has_ev),
            u8::from(a.has_hp),
            a.rural.map_or(String::new(), |r| u8::from(r).to_string()),
            a.children.map_or(String::new(), |c| c.to_string()),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn household(
        dwelling: Dwelling,
        occupants: u32,
        area: f64,
        income: f64,
        ev: bool,
        hp: bool,
    ) -> HouseholdAttributes {
        HouseholdAttributes {
            meter_id: format!("{dwelling:?}-{occupants}-{area}-{income}-{ev}-{hp}"),
            dwelling,
            occupants,
            area_sqm: area,
            income_dkk: income,
            has_ev: ev,
            has_hp: hp,
            rural: None,
            children: None,
        }
    }

    fn code_of(a: &HouseholdAttributes) -> String {
        match CategoryScheme::default().assign(a) {
            Assignment::Code(c) => c.to_string(),
            Assignment::Excluded(e) => format!("{e:?}"),
        }
    }

    #[test]
    fn assigns_reference_examples() {
        let ev_house = household(Dwelling::House, 3, 160.0, 500_000.0, true, false);
        assert_eq!(code_of(&ev_house), "H_P3_A3_€3_EV1_HP0");
        let flat = household(Dwelling::Apartment, 1, 50.0, 200_000.0, false, false);
        assert_eq!(code_of(&flat), "Ap_P1_A1_€1_EV0_HP0");
        let both = household(Dwelling::House, 4, 120.0, 300_000.0, true, true);
        assert_eq!(code_of(&both), "EvAndHp");
    }

    #[test]
    fn band_edges_are_inclusive() {
        assert_eq!(code_of(&household(Dwelling::House, 2, 110.0, 240_260.0, false, false)), "H_P2_A1_€1_EV0_HP0");
        assert_eq!(code_of(&household(Dwelling::House, 2, 110.01, 240_261.0, false, false)), "H_P2_A2_€2_EV0_HP0");
        assert_eq!(code_of(&household(Dwelling::Apartment, 4, 85.0, 449_097.0, false, true)), "Ap_P3_A2_€2_EV0_HP1");
        assert_eq!(code_of(&household(Dwelling::Apartment, 7, 85.5, 449_098.0, false, false)), "Ap_P5+_A3_€3_EV0_HP0");
    }

    #[test]
    fn default_scheme_enumerates_216() {
        let codes = CategoryScheme::default().enumerate_codes();
        assert_eq!(codes.len(), 216);
        assert!(codes.iter().all(|c| !(c.ev && c.hp)));
        let strings: Vec<String> = codes.iter().map(ToString::to_string).collect();
        let mut sorted = strings.clone();
        sorted.sort();
        assert_eq!(strings, sorted);
        assert_eq!(strings[0], "Ap_P1_A1_€1_EV0_HP0");
    }

    #[test]
    fn degenerate_scheme_has_one_code() {
        let scheme = CategoryScheme {
            house_area_edges: vec![],
            apartment_area_edges: vec![],
            income_edges: vec![],
            occupancy_lower_bounds: vec![1],
            dwellings: vec![Dwelling::House],
            ev_levels: vec![false],
            hp_levels: vec![false],
            ..CategoryScheme::default()
        };
        scheme.validate().unwrap();
        let codes = scheme.enumerate_codes();
        assert_eq!(codes.len(), 1);
        assert_eq!(codes[0].to_string(), "H_P1_A1_€1_EV0_HP0");
    }

    #[test]
    fn parse_accepts_ascii_and_rejects_junk() {
        let code: CategoryCode = "H_P5+_A2_EUR1_EV0_HP1".parse().unwrap();
        assert_eq!(code.to_string(), "H_P5+_A2_€1_EV0_HP1");
        assert_eq!(code.file_stem(), "H_P5+_A2_EUR1_EV0_HP1");
        for bad in ["", "H_P3_A3_€3_EV1", "X_P3_A3_€3_EV1_HP0", "H_P3_A0_€3_EV1_HP0", "H_P3_A3_€3_EVO_HP0"] {
            assert!(bad.parse::<CategoryCode>().is_err(), "{bad}");
        }
    }

    #[test]
    fn table_and_privacy_filter() {
        let mut attrs = vec![
            household(Dwelling::House, 3, 160.0, 500_000.0, false, false),
            household(Dwelling::House, 3, 170.0, 600_000.0, false, false),
            household(Dwelling::Apartment, 1, 40.0, 100_000.0, false, false),
            household(Dwelling::House, 3, 170.0, 600_000.0, true, true),
        ];
        attrs[1].meter_id = "second".into();
        let scheme = CategoryScheme::default();
        let table = build_category_table(&attrs, &scheme).unwrap();
        let counts: Vec<usize> = table.categories.values().map(|e| e.count).collect();
        assert_eq!(counts, vec![1, 2]);
        assert_eq!(table.excluded.len(), 1);
        assert_eq!(apply_privacy_filter(table.clone(), 1), table);

        let filtered = apply_privacy_filter(table, 2);
        assert_eq!(filtered.categories.len(), 1);
        assert_eq!(filtered.suppressed.len(), 1);
        assert_eq!(filtered.total_households(), 4);
    }

    #[test]
    fn all_excluded_gives_empty_table() {
        let attrs = vec![household(Dwelling::House, 3, 160.0, 1.0, true, true)];
        let table = build_category_table(&attrs, &CategoryScheme::default()).unwrap();
        assert!(table.categories.is_empty());
    }

    #[test]
    fn duplicate_meter_is_fatal() {
        let a = household(Dwelling::House, 3, 160.0, 1.0, false, false);
        assert!(build_category_table(&[a.clone(), a], &CategoryScheme::default()).is_err());
    }

    #[test]
    fn shares_follow_optional_attributes() {
        let mut attrs: Vec<_> = (0..4)
            .map(|i| {
                let mut a = household(Dwelling::House, 3 + (i % 2), 160.0, 500_000.0, false, false);
                a.meter_id = format!("m{i}");
                a.rural = Some(i == 0);
                a.children = Some(i);
                a
            })
            .collect();
        attrs[3].children = Some(5);
        let table = build_category_table(&attrs, &CategoryScheme::default()).unwrap();
        let entry = table.categories.values().next().unwrap();
        assert_eq!(entry.shares.rural, Some(0.25));
        assert_eq!(entry.shares.occupants[&3], 0.5);
        assert_eq!(entry.shares.children[&3], 0.25);
        let json: serde_json::Value = serde_json::from_str(&table.to_json()).unwrap();
        assert_eq!(json["categories"]["H_P3_A3_€3_EV0_HP0"]["count"], 4);
    }

    #[test]
    fn attributes_round_trip() {
        let mut a = household(Dwelling::Apartment, 2, 71.5, 300_000.0, false, true);
        a.rural = Some(true);
        let b = household(Dwelling::House, 5, 200.0, 0.0, true, false);
        let mut buf = Vec::new();
        write_attributes(&mut buf, &[a.clone(), b.clone()]).unwrap();
        let back = read_attributes(buf.as_slice(), "t").unwrap();
        assert_eq!(back, vec![a, b]);
    }

    #[test]
    fn attributes_reject_bad_lines() {
        let input = format!("{ATTRIBUTES_HEADER}\nm1,AP,0,50,1000,0,0\n");
        let err = read_attributes(input.as_bytes(), "attrs").unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }));
        assert!(read_attributes("meter,x\n".as_bytes(), "attrs").is_err());
    }
}
