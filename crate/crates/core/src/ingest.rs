// Copyright 2026 The loadprof Authors
// SPDX-License-Identifier: Apache-2.0

//! Readings CSV parsing and profile cleaning.
//!
//! The readings file has the header `meter_id,hour,kwh`, one row per meter
//! and hour in any order. Hours without a row are missing. A reading is
//! faulty when it is above 29 kWh, non-positive, unparseable, or repeats an
//! hour already seen for that meter (the first occurrence wins). A meter is
//! rejected when missing plus faulty hours exceed [`MAX_GAP_HOURS`].

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::ops::{Add, AddAssign};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kwh::{parse_millis, Kwh, Reading, READING_CAP};

/// Hours in a non-leap year.
pub const DEFAULT_HOURS: usize = 8760;

/// Hours in a leap year.
pub const LEAP_HOURS: usize = 8784;

/// A profile with more missing or faulty hours than this is rejected.
pub const MAX_GAP_HOURS: usize = 1000;

pub const READINGS_HEADER: &str = "meter_id,hour,kwh";

/// Stored diagnostics are capped; the total is still counted.
const MAX_STORED_DIAGNOSTICS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawValue {
    Kwh(Kwh),
    Unparseable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawReading {
    pub meter_id: String,
    pub hour: usize,
    pub kwh: RawValue,
}

/// A problem with one input line. Line numbers are 1-based and count the header.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Default, Clone)]
pub struct Diagnostics {
    pub entries: Vec<Diagnostic>,
    pub total: usize,
}

impl Diagnostics {
    fn push(&mut self, line: usize, message: String) {
        self.total += 1;
        if self.entries.len() < MAX_STORED_DIAGNOSTICS {
            self.entries.push(Diagnostic { line, message });
        }
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
}

#[derive(Debug, Default, Clone)]
pub struct ParsedReadings {
    pub readings: Vec<RawReading>,
    pub diagnostics: Diagnostics,
}

/// Counts of faulty entries and rejections. Merging is commutative, so
/// per-shard reports can be summed in any order.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub accepted: u64,
    pub rejected: u64,
    pub faulty_over_cap: u64,
    pub faulty_non_positive: u64,
    pub faulty_unparseable: u64,
    pub faulty_duplicate: u64,
    pub rejected_excess_gaps: u64,
}

impl CleaningReport {
    pub fn meters_seen(&self) -> u64 {
        self.accepted + self.rejected
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl Add for CleaningReport {
    type Output = CleaningReport;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for CleaningReport {
    fn add_assign(&mut self, rhs: Self) {
        self.accepted += rhs.accepted;
        self.rejected += rhs.rejected;
        self.faulty_over_cap += rhs.faulty_over_cap;
        self.faulty_non_positive += rhs.faulty_non_positive;
        self.faulty_unparseable += rhs.faulty_unparseable;
        self.faulty_duplicate += rhs.faulty_duplicate;
        self.rejected_excess_gaps += rhs.rejected_excess_gaps;
    }
}

impl std::iter::Sum for CleaningReport {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(CleaningReport::default(), Add::add)
    }
}

/// One household's cleaned hourly series.
///
/// `values[h]` is `None` when hour `h` was missing or faulty.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanProfile {
    pub meter_id: String,
    pub values: Vec<Option<Reading>>,
    pub valid_count: usize,
    pub gap_count: usize,
    pub annual_raw_sum: Kwh,
    pub annual_corrected: f64,
}

impl CleanProfile {
    /// Builds a profile from already-validated hourly values.
    pub fn from_values(meter_id: impl Into<String>, values: Vec<Option<Reading>>) -> Self {
        let valid_count = values.iter().filter(|v| v.is_some()).count();
        let annual_raw_sum = Kwh(values.iter().flatten().map(|r| i64::from(r.millis())).sum());
        let gap_count = values.len() - valid_count;
        let mut profile = CleanProfile {
            meter_id: meter_id.into(),
            values,
            valid_count,
            gap_count,
            annual_raw_sum,
            annual_corrected: annual_raw_sum.as_f64(),
        };
        if let Ok(corrected) = correct_annual_total(&profile) {
            profile.annual_corrected = corrected;
        }
        profile
    }

    pub fn hours(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, hour: usize) -> Option<Reading> {
        self.values.get(hour).copied().flatten()
    }

    /// Largest present value.
    pub fn max_reading(&self) -> Option<Reading> {
        self.values.iter().flatten().copied().max()
    }
}

/// Gap-corrected annual consumption in kWh.
///
/// Every missing or faulty hour is credited with the profile's mean valid
/// hour, so the total can only round upwards. Seasonality is ignored.
pub fn correct_annual_total(profile: &CleanProfile) -> Result<f64> {
    if profile.valid_count == 0 {
        return Err(Error::domain(format!(
            "meter {}: no valid hours to base a gap correction on",
            profile.meter_id
        )));
    }
    let raw = profile.annual_raw_sum.as_f64();
    Ok(raw + profile.gap_count as f64 * (raw / profile.valid_count as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    ExcessGaps,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub meter_id: String,
    pub reason: RejectReason,
    pub gap_count: usize,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
struct FaultTally {
    over_cap: u64,
    non_positive: u64,
    unparseable: u64,
    duplicate: u64,
}

/// Incrementally applies the cleaning rules for one meter.
#[derive(Debug, Clone)]
pub struct ProfileAssembler {
    meter_id: String,
    values: Vec<Option<Reading>>,
    seen: Vec<bool>,
    faults: FaultTally,
}

impl ProfileAssembler {
    pub fn new(meter_id: impl Into<String>, hours: usize) -> Self {
        ProfileAssembler {
            meter_id: meter_id.into(),
            values: vec![None; hours],
            seen: vec![false; hours],
            faults: FaultTally::default(),
        }
    }

    pub fn meter_id(&self) -> &str {
        &self.meter_id
    }

    /// Records one reading. Hours outside the profile are ignored; the
    /// parser reports them before they get here.
    pub fn push(&mut self, hour: usize, value: RawValue) {
        let Some(seen) = self.seen.get_mut(hour) else {
            return;
        };
        if *seen {
            self.faults.duplicate += 1;
            return;
        }
        *seen = true;
        match value {
            RawValue::Unparseable => self.faults.unparseable += 1,
            RawValue::Kwh(v) if v.0 <= 0 => self.faults.non_positive += 1,
            RawValue::Kwh(v) if v > READING_CAP => self.faults.over_cap += 1,
            RawValue::Kwh(v) => self.values[hour] = Reading::new(v),
        }
    }

    /// Closes the meter, returning either the accepted profile or the
    /// rejection, together with the meter's contribution to the report.
    pub fn finish(self) -> (std::result::Result<CleanProfile, Rejection>, CleaningReport) {
        let mut report = CleaningReport {
            faulty_over_cap: self.faults.over_cap,
            faulty_non_positive: self.faults.non_positive,
            faulty_unparseable: self.faults.unparseable,
            faulty_duplicate: self.faults.duplicate,
            ..CleaningReport::default()
        };
        let profile = CleanProfile::from_values(self.meter_id, self.values);
        if profile.gap_count > MAX_GAP_HOURS {
            report.rejected = 1;
            report.rejected_excess_gaps = 1;
            let rejection = Rejection {
                meter_id: profile.meter_id,
                reason: RejectReason::ExcessGaps,
                gap_count: profile.gap_count,
            };
            (Err(rejection), report)
        } else {
            report.accepted = 1;
            (Ok(profile), report)
        }
    }
}

/// Assembles one meter's readings into a cleaned profile or a rejection.
///
/// Readings for other meters are a precondition violation and are skipped.
pub fn assemble_profile(
    meter_id: &str,
    readings: &[RawReading],
    hours: usize,
) -> std::result::Result<CleanProfile, Rejection> {
    let mut assembler = ProfileAssembler::new(meter_id, hours);
    for r in readings.iter().filter(|r| r.meter_id == meter_id) {
        assembler.push(r.hour, r.kwh);
    }
    assembler.finish().0
}

/// One parsed data line, borrowing the meter id from the line buffer.
#[derive(Debug, Clone, Copy)]
pub struct ReadingRef<'a> {
    pub meter_id: &'a str,
    pub hour: Option<usize>,
    pub kwh: RawValue,
}

fn check_header(line: &str, context: &str, expected: &str) -> Result<()> {
    let header = line.trim_start_matches('\u{feff}').trim();
    if header != expected {
        return Err(Error::format(
            context,
            1,
            format!("expected header `{expected}`, found `{header}`"),
        ));
    }
    Ok(())
}

/// Streams data lines of a readings file to `visit`.
///
/// Lines with the wrong number of fields are reported and not visited.
/// Lines with a bad hour are reported and visited with `hour = None` so the
/// meter still counts as seen. Unparseable values are reported and visited
/// as [`RawValue::Unparseable`].
pub fn scan_readings<R: BufRead>(
    mut reader: R,
    hours: usize,
    context: &str,
    mut visit: impl FnMut(ReadingRef<'_>),
) -> Result<Diagnostics> {
    let mut buf = String::new();
    let mut line_no = 0usize;
    let mut diagnostics = Diagnostics::default();

    let read = |reader: &mut R, buf: &mut String| -> Result<usize> {
        buf.clear();
        reader
            .read_line(buf)
            .map_err(|e| Error::io(context, e))
    };

    if read(&mut reader, &mut buf)? == 0 {
        return Err(Error::format(context, 1, "missing header"));
    }
    line_no += 1;
    check_header(&buf, context, READINGS_HEADER)?;

    loop {
        if read(&mut reader, &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let line = buf.trim_end_matches(['\n', '\r']);
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (Some(meter), Some(hour), Some(kwh), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            diagnostics.push(line_no, format!("expected 3 fields in `{line}`"));
            continue;
        };
        let meter = meter.trim();
        if meter.is_empty() {
            diagnostics.push(line_no, "empty meter_id".to_string());
            continue;
        }
        let hour = match hour.trim().parse::<usize>() {
            Ok(h) if h < hours => Some(h),
            Ok(h) => {
                diagnostics.push(line_no, format!("hour {h} outside [0, {}]", hours - 1));
                None
            }
            Err(_) => {
                diagnostics.push(line_no, format!("hour `{}` is not an integer", hour.trim()));
                None
            }
        };
        let kwh = match parse_millis(kwh.trim().as_bytes()) {
            Some(m) => RawValue::Kwh(Kwh(m)),
            None => {
                if hour.is_some() {
                    diagnostics.push(line_no, format!("unparseable kwh `{}`", kwh.trim()));
                }
                RawValue::Unparseable
            }
        };
        visit(ReadingRef {
            meter_id: meter,
            hour,
            kwh,
        });
    }
    Ok(diagnostics)
}

/// Parses every data line into a [`RawReading`].
pub fn parse_readings<R: BufRead>(reader: R, hours: usize) -> Result<ParsedReadings> {
    let mut readings = Vec::new();
    let diagnostics = scan_readings(reader, hours, "readings", |r| {
        if let Some(hour) = r.hour {
            readings.push(RawReading {
                meter_id: r.meter_id.to_string(),
                hour,
                kwh: r.kwh,
            });
        }
    })?;
    Ok(ParsedReadings {
        readings,
        diagnostics,
    })
}

/// Result of cleaning a whole readings file.
#[derive(Debug, Clone)]
pub struct IngestOutcome {
    /// Accepted profiles sorted by meter id.
    pub profiles: Vec<CleanProfile>,
    pub rejections: Vec<Rejection>,
    pub report: CleaningReport,
    pub diagnostics: Diagnostics,
}

/// Parses and cleans a readings stream in one pass.
///
/// Readings are routed to one assembler per meter; closing the assemblers
/// runs in parallel and their reports are merged.
pub fn ingest_readings<R: BufRead>(reader: R, hours: usize, context: &str) -> Result<IngestOutcome> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut assemblers: Vec<ProfileAssembler> = Vec::new();
    let mut last: Option<usize> = None;

    let diagnostics = scan_readings(reader, hours, context, |r| {
        let slot = match last {
            Some(i) if assemblers[i].meter_id() == r.meter_id => i,
            _ => match index.get(r.meter_id) {
                Some(&i) => i,
                None => {
                    let i = assemblers.len();
                    assemblers.push(ProfileAssembler::new(r.meter_id, hours));
                    index.insert(r.meter_id.to_string(), i);
                    i
                }
            },
        };
        last = Some(slot);
        if let Some(hour) = r.hour {
            assemblers[slot].push(hour, r.kwh);
        }
    })?;
    drop(index);

    let finished: Vec<_> = assemblers.into_par_iter().map(ProfileAssembler::finish).collect();
    let mut profiles = Vec::new();
    let mut rejections = Vec::new();
    let mut report = CleaningReport::default();
    for (outcome, part) in finished {
        report += part;
        match outcome {
            Ok(p) => profiles.push(p),
            Err(r) => rejections.push(r),
        }
    }
    profiles.sort_by(|a, b| a.meter_id.cmp(&b.meter_id));
    rejections.sort_by(|a, b| a.meter_id.cmp(&b.meter_id));
    Ok(IngestOutcome {
        profiles,
        rejections,
        report,
        diagnostics,
    })
}

/// Writes profiles in the readings format, present hours only.
pub fn write_readings<'a, W: Write>(
    mut out: W,
    profiles: impl IntoIterator<Item = &'a CleanProfile>,
) -> std::io::Result<()> {
    writeln!(out, "{READINGS_HEADER}")?;
    for p in profiles {
        for (hour, value) in p.values.iter().enumerate() {
            if let Some(v) = value {
                writeln!(out, "{},{},{}", p.meter_id, hour, v.kwh())?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(meter: &str, hour: usize, millis: i64) -> RawReading {
        RawReading {
            meter_id: meter.to_string(),
            hour,
            kwh: RawValue::Kwh(Kwh(millis)),
        }
    }

    #[test]
    fn parses_lines() {
        let input = "meter_id,hour,kwh\nm1,42,0.512\nm1,43,abc\n";
        let parsed = parse_readings(input.as_bytes(), DEFAULT_HOURS).unwrap();
        assert_eq!(parsed.readings[0], raw("m1", 42, 512));
        assert_eq!(parsed.readings[1].kwh, RawValue::Unparseable);
        assert_eq!(parsed.diagnostics.total, 1);
        assert_eq!(parsed.diagnostics.entries[0].line, 3);
    }

    #[test]
    fn empty_data_section() {
        let parsed = parse_readings("meter_id,hour,kwh\n".as_bytes(), DEFAULT_HOURS).unwrap();
        assert!(parsed.readings.is_empty());
        let out = ingest_readings("meter_id,hour,kwh\n".as_bytes(), DEFAULT_HOURS, "t").unwrap();
        assert_eq!(out.report.accepted, 0);
    }

    #[test]
    fn missing_header_is_fatal() {
        let err = parse_readings("m1,1,0.5\n".as_bytes(), DEFAULT_HOURS).unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }));
        assert!(parse_readings("".as_bytes(), DEFAULT_HOURS).is_err());
    }

    #[test]
    fn out_of_range_hour_is_diagnosed() {
        let input = "meter_id,hour,kwh\nm1,8760,1.0\nm1,-1,1.0\nm1,1\n";
        let parsed = parse_readings(input.as_bytes(), DEFAULT_HOURS).unwrap();
        assert!(parsed.readings.is_empty());
        let lines: Vec<_> = parsed.diagnostics.entries.iter().map(|d| d.line).collect();
        assert_eq!(lines, vec![2, 3, 4]);
    }

    #[test]
    fn over_cap_reading_is_faulty() {
        let mut readings: Vec<_> = (0..100).map(|h| raw("m", h, 1000)).collect();
        readings[7] = raw("m", 7, 29_500);
        let p = assemble_profile("m", &readings, 100).unwrap();
        assert_eq!(p.get(7), None);
        assert_eq!(p.gap_count, 1);
        assert_eq!(p.valid_count, 99);
    }

    #[test]
    fn dense_profile_has_no_gaps() {
        let readings: Vec<_> = (0..DEFAULT_HOURS).map(|h| raw("m", h, 1 + (h as i64 % 29_000))).collect();
        let p = assemble_profile("m", &readings, DEFAULT_HOURS).unwrap();
        assert_eq!(p.gap_count, 0);
        assert_eq!(p.valid_count, DEFAULT_HOURS);
    }

    #[test]
    fn rejects_over_thousand_gaps() {
        let at_limit: Vec<_> = (MAX_GAP_HOURS..DEFAULT_HOURS).map(|h| raw("m", h, 500)).collect();
        assert!(assemble_profile("m", &at_limit, DEFAULT_HOURS).is_ok());
        let over: Vec<_> = (MAX_GAP_HOURS + 1..DEFAULT_HOURS).map(|h| raw("m", h, 500)).collect();
        let rejection = assemble_profile("m", &over, DEFAULT_HOURS).unwrap_err();
        assert_eq!(rejection.gap_count, 1001);
        assert_eq!(rejection.reason, RejectReason::ExcessGaps);
    }

    #[test]
    fn duplicate_hour_first_wins() {
        let readings = vec![raw("m", 0, 300), raw("m", 0, 700), raw("m", 1, -5), raw("m", 1, 400)];
        let mut a = ProfileAssembler::new("m", 3);
        for r in &readings {
            a.push(r.hour, r.kwh);
        }
        let (p, report) = a.finish();
        let p = p.unwrap();
        assert_eq!(p.get(0).unwrap().millis(), 300);
        assert_eq!(p.get(1), None);
        assert_eq!(report.faulty_duplicate, 2);
        assert_eq!(report.faulty_non_positive, 1);
        assert_eq!(p.gap_count, 2);
    }

    #[test]
    fn annual_correction() {
        let dense = CleanProfile::from_values("a", vec![Reading::new(Kwh(500)); 8000]);
        assert_eq!(dense.annual_raw_sum, Kwh(4_000_000));
        assert_eq!(correct_annual_total(&dense).unwrap(), 4000.0);

        let mut values = vec![Reading::new(Kwh(500)); 8660];
        values.extend(std::iter::repeat_n(None, 100));
        let gappy = CleanProfile::from_values("b", values);
        assert_eq!(gappy.annual_raw_sum, Kwh(4_330_000));
        assert_eq!(correct_annual_total(&gappy).unwrap(), 4380.0);
        assert!(gappy.annual_corrected > gappy.annual_raw_sum.as_f64());

        let empty = CleanProfile::from_values("c", vec![None; 10]);
        assert!(correct_annual_total(&empty).is_err());
    }

    #[test]
    fn report_counts_every_meter() {
        let mut input = String::from("meter_id,hour,kwh\n");
        for h in 0..24 {
            input.push_str(&format!("good,{h},0.400\n"));
        }
        input.push_str("bad,0,30.0\nbad,1,0\nbad,2,x\nbad,2,1.0\n");
        let out = ingest_readings(input.as_bytes(), 24, "t").unwrap();
        // with H = 24 neither meter reaches the gap limit
        assert_eq!(out.report.accepted, 2);
        assert_eq!(out.report.faulty_over_cap, 1);
        assert_eq!(out.report.faulty_non_positive, 1);
        assert_eq!(out.report.faulty_unparseable, 1);
        assert_eq!(out.report.faulty_duplicate, 1);
        assert_eq!(out.report.meters_seen(), 2);
        let json: serde_json::Value = serde_json::from_str(&out.report.to_json()).unwrap();
        for key in [
            "accepted",
            "rejected",
            "faulty_over_cap",
            "faulty_non_positive",
            "faulty_unparseable",
            "faulty_duplicate",
            "rejected_excess_gaps",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
}
