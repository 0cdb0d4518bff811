// Copyright 2026 The loadprof Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact energy quantities.
//!
//! Meter readings carry 0.001 kWh resolution, so energy is stored as an
//! integer count of watt-hours ("millis" of a kWh). Sums and sums of squares
//! stay exact and merge in any order.

use std::fmt;
use std::num::NonZeroU32;
use std::str::FromStr;

/// Watt-hours per kWh.
pub const MILLIS_PER_KWH: i64 = 1000;

/// Largest valid hourly reading, 29.0 kWh.
pub const READING_CAP: Kwh = Kwh(29_000);

/// An energy amount in integer watt-hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Kwh(pub i64);

impl Kwh {
    pub const ZERO: Kwh = Kwh(0);

    pub const fn from_millis(millis: i64) -> Self {
        Kwh(millis)
    }

    pub const fn millis(self) -> i64 {
        self.0
    }

    /// Rounds a floating kWh value to the nearest watt-hour.
    pub fn from_kwh_f64(value: f64) -> Self {
        Kwh((value * MILLIS_PER_KWH as f64).round() as i64)
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / MILLIS_PER_KWH as f64
    }
}

impl fmt::Display for Kwh {
    /// Always three fractional digits, e.g. `0.512`, `-1.000`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:03}", abs / 1000, abs % 1000)
    }
}

/// Serializes as a kWh number.
impl serde::Serialize for Kwh {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_f64())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseKwhError;

impl fmt::Display for ParseKwhError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("not a decimal with at most three fractional digits")
    }
}

impl std::error::Error for ParseKwhError {}

impl FromStr for Kwh {
    type Err = ParseKwhError;

    /// Parses `[-+]digits[.digits]` with at most three fractional digits,
    /// without passing through floating point.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_millis(s.as_bytes()).map(Kwh).ok_or(ParseKwhError)
    }
}

pub(crate) fn parse_millis(bytes: &[u8]) -> Option<i64> {
    let (negative, rest) = match bytes.first()? {
        b'-' => (true, &bytes[1..]),
        b'+' => (false, &bytes[1..]),
        _ => (false, bytes),
    };
    let (int_part, frac_part) = match rest.iter().position(|&b| b == b'.') {
        Some(dot) => (&rest[..dot], &rest[dot + 1..]),
        None => (rest, &rest[rest.len()..]),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if frac_part.len() > 3 || int_part.len() > 12 {
        return None;
    }
    let mut value: i64 = 0;
    for &b in int_part {
        if !b.is_ascii_digit() {
            return None;
        }
        value = value * 10 + i64::from(b - b'0');
    }
    let mut frac: i64 = 0;
    for &b in frac_part {
        if !b.is_ascii_digit() {
            return None;
        }
        frac = frac * 10 + i64::from(b - b'0');
    }
    for _ in frac_part.len()..3 {
        frac *= 10;
    }
    let millis = value * 1000 + frac;
    Some(if negative { -millis } else { millis })
}

/// A present hourly reading: strictly positive and at most [`READING_CAP`].
///
/// Zero is never a valid reading, which lets `Option<Reading>` occupy four
/// bytes per hour in a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Reading(NonZeroU32);

impl Reading {
    /// Accepts values in `(0, 29.0]` kWh.
    pub fn new(value: Kwh) -> Option<Self> {
        if value.0 <= 0 || value > READING_CAP {
            return None;
        }
        NonZeroU32::new(value.0 as u32).map(Reading)
    }

    pub fn millis(self) -> u32 {
        self.0.get()
    }

    pub fn kwh(self) -> Kwh {
        Kwh(i64::from(self.0.get()))
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0.get()) / 1000.0
    }
}
