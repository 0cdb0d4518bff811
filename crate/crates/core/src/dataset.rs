// Copyright 2026 The loadprof Authors
// SPDX-License-Identifier: Apache-2.0

//! Cleaned profiles joined with their category assignments.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::{ingest_readings, CleanProfile, IngestOutcome};
use crate::taxonomy::{
    apply_privacy_filter, build_category_table, read_attributes, CategoryCode, CategoryScheme,
    CategoryTable, HouseholdAttributes,
};

#[derive(Debug, Clone)]
pub struct Dataset {
    pub hours: usize,
    /// Accepted profiles, sorted by meter id.
    pub profiles: Vec<CleanProfile>,
    /// Attributes of households with an accepted profile.
    pub attributes: Vec<HouseholdAttributes>,
    /// Categories after the privacy filter.
    pub table: CategoryTable,
    /// Accepted profiles without an attributes row.
    pub unattributed: Vec<String>,
    index: HashMap<String, usize>,
}

impl Dataset {
    /// Joins profiles and attributes, classifies, and applies the privacy
    /// filter with `scheme.privacy_k`.
    pub fn new(
        hours: usize,
        mut profiles: Vec<CleanProfile>,
        attributes: Vec<HouseholdAttributes>,
        scheme: &CategoryScheme,
    ) -> Result<Self> {
        scheme.validate()?;
        profiles.sort_by(|a, b| a.meter_id.cmp(&b.meter_id));
        if let Some(w) = profiles.windows(2).find(|w| w[0].meter_id == w[1].meter_id) {
            return Err(Error::domain(format!("duplicate profile for meter `{}`", w[0].meter_id)));
        }
        if let Some(p) = profiles.iter().find(|p| p.hours() != hours) {
            return Err(Error::domain(format!(
                "meter {} has {} hours, expected {hours}",
                p.meter_id,
                p.hours()
            )));
        }
        let index: HashMap<String, usize> = profiles
            .iter()
            .enumerate()
            .map(|(i, p)| (p.meter_id.clone(), i))
            .collect();
        let attributes: Vec<HouseholdAttributes> = attributes
            .into_iter()
            .filter(|a| index.contains_key(&a.meter_id))
            .collect();
        let table = apply_privacy_filter(build_category_table(&attributes, scheme)?, scheme.privacy_k);
        let attributed: std::collections::HashSet<&str> =
            attributes.iter().map(|a| a.meter_id.as_str()).collect();
        let unattributed = profiles
            .iter()
            .filter(|p| !attributed.contains(p.meter_id.as_str()))
            .map(|p| p.meter_id.clone())
            .collect();
        Ok(Dataset {
            hours,
            profiles,
            attributes,
            table,
            unattributed,
            index,
        })
    }

    pub fn profile(&self, meter_id: &str) -> Option<&CleanProfile> {
        self.index.get(meter_id).map(|&i| &self.profiles[i])
    }

    /// Profiles of one category in table order; empty when the category
    /// is absent or suppressed.
    pub fn category_profiles(&self, code: &CategoryCode) -> Vec<&CleanProfile> {
        self.table
            .members(code)
            .iter()
            .filter_map(|m| self.profile(m))
            .collect()
    }

    pub fn by_category(&self) -> BTreeMap<CategoryCode, Vec<&CleanProfile>> {
        self.table
            .categories
            .keys()
            .map(|c| (*c, self.category_profiles(c)))
            .collect()
    }
}

/// Loads a readings file and an attributes file and builds the dataset.
pub fn load_dataset(
    readings: &Path,
    attributes: &Path,
    hours: usize,
    scheme: &CategoryScheme,
) -> Result<(Dataset, IngestOutcome)> {
    let file = File::open(readings).map_err(|e| Error::io(readings, e))?;
    let mut outcome = ingest_readings(
        BufReader::with_capacity(1 << 20, file),
        hours,
        &readings.display().to_string(),
    )?;
    let file = File::open(attributes).map_err(|e| Error::io(attributes, e))?;
    let attrs = read_attributes(BufReader::new(file), &attributes.display().to_string())?;
    let profiles = std::mem::take(&mut outcome.profiles);
    let dataset = Dataset::new(hours, profiles, attrs, scheme)?;
    Ok((dataset, outcome))
}
