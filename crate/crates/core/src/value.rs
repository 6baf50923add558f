//! Cell values and their canonical text forms.
//!
//! Dates persist as `YYYY-MM-DD` and timestamps as `YYYY-MM-DDTHH:MM:SSZ`
//! (UTC, whole seconds). The parsers additionally accept the `MM-DD-YY` and
//! `MM-DD-YY HH:MM:SS` shapes used by hand-typed fixtures; an hour of `24`
//! in the latter rolls over to the next day and is reported as a
//! normalization.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use chrono::{Datelike, Days, NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Date = NaiveDate;
/// UTC instant at second precision.
pub type Timestamp = NaiveDateTime;

const DATE_FORMAT: &str = "%Y-%m-%d";
const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldType {
    Integer,
    Float,
    Text,
    Date,
    Timestamp,
}

impl FieldType {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldType::Integer => "integer",
            FieldType::Float => "float",
            FieldType::Text => "text",
            FieldType::Date => "date",
            FieldType::Timestamp => "timestamp",
        }
    }
}

impl fmt::Display for FieldType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single cell.
///
/// Equality, ordering and hashing are total: floats compare by
/// [`f64::total_cmp`], so `NaN == NaN` and `-0.0 != 0.0`. Values of
/// different kinds order by kind, with `Null` first.
#[derive(Debug, Clone)]
pub enum FieldValue {
    Null,
    Integer(i64),
    Float(f64),
    Text(String),
    Date(Date),
    Timestamp(Timestamp),
}

impl FieldValue {
    pub fn text(s: impl Into<String>) -> Self {
        FieldValue::Text(s.into())
    }

    pub fn is_null(&self) -> bool {
        matches!(self, FieldValue::Null)
    }

    /// Kind of a non-null value.
    pub fn field_type(&self) -> Option<FieldType> {
        Some(match self {
            FieldValue::Null => return None,
            FieldValue::Integer(_) => FieldType::Integer,
            FieldValue::Float(_) => FieldType::Float,
            FieldValue::Text(_) => FieldType::Text,
            FieldValue::Date(_) => FieldType::Date,
            FieldValue::Timestamp(_) => FieldType::Timestamp,
        })
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            FieldValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_date(&self) -> Option<Date> {
        match self {
            FieldValue::Date(d) => Some(*d),
            FieldValue::Timestamp(t) => Some(t.date()),
            _ => None,
        }
    }

    pub fn as_timestamp(&self) -> Option<Timestamp> {
        match self {
            FieldValue::Timestamp(t) => Some(*t),
            _ => None,
        }
    }

    /// Canonical text, or `None` for null.
    pub fn canonical(&self) -> Option<String> {
        Some(match self {
            FieldValue::Null => return None,
            FieldValue::Integer(i) => i.to_string(),
            FieldValue::Float(x) => x.to_string(),
            FieldValue::Text(s) => s.clone(),
            FieldValue::Date(d) => format_date(*d),
            FieldValue::Timestamp(t) => format_timestamp(*t),
        })
    }

    /// Parses `raw` as a value of `ty`. Never yields `Null`.
    pub fn parse(raw: &str, ty: FieldType) -> Result<Parsed> {
        let mut normalized = None;
        let value = match ty {
            FieldType::Integer => FieldValue::Integer(
                raw.trim()
                    .parse()
                    .map_err(|_| Error::InvalidValue(format!("`{raw}` is not an integer")))?,
            ),
            FieldType::Float => FieldValue::Float(
                raw.trim()
                    .parse()
                    .map_err(|_| Error::InvalidValue(format!("`{raw}` is not a float")))?,
            ),
            FieldType::Text => FieldValue::Text(raw.to_owned()),
            FieldType::Date => FieldValue::Date(parse_date(raw)?),
            FieldType::Timestamp => {
                let (t, n) = parse_timestamp(raw)?;
                normalized = n;
                FieldValue::Timestamp(t)
            }
        };
        Ok(Parsed { value, normalized })
    }

    fn rank(&self) -> u8 {
        match self {
            FieldValue::Null => 0,
            FieldValue::Integer(_) => 1,
            FieldValue::Float(_) => 2,
            FieldValue::Text(_) => 3,
            FieldValue::Date(_) => 4,
            FieldValue::Timestamp(_) => 5,
        }
    }
}

/// Result of [`FieldValue::parse`].
#[derive(Debug, Clone)]
pub struct Parsed {
    pub value: FieldValue,
    /// Set when the input was outside the canonical domain and was rewritten.
    pub normalized: Option<String>,
}

impl PartialEq for FieldValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for FieldValue {}

impl PartialOrd for FieldValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FieldValue {
    fn cmp(&self, other: &Self) -> Ordering {
        use FieldValue::*;
        match (self, other) {
            (Null, Null) => Ordering::Equal,
            (Integer(a), Integer(b)) => a.cmp(b),
            (Float(a), Float(b)) => a.total_cmp(b),
            (Text(a), Text(b)) => a.cmp(b),
            (Date(a), Date(b)) => a.cmp(b),
            (Timestamp(a), Timestamp(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Hash for FieldValue {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            FieldValue::Null => {}
            FieldValue::Integer(i) => i.hash(state),
            FieldValue::Float(x) => x.to_bits().hash(state),
            FieldValue::Text(s) => s.hash(state),
            FieldValue::Date(d) => d.hash(state),
            FieldValue::Timestamp(t) => t.hash(state),
        }
    }
}

impl fmt::Display for FieldValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.canonical() {
            Some(s) => f.write_str(&s),
            None => f.write_str("NULL"),
        }
    }
}

impl From<i64> for FieldValue {
    fn from(v: i64) -> Self {
        FieldValue::Integer(v)
    }
}

impl From<f64> for FieldValue {
    fn from(v: f64) -> Self {
        FieldValue::Float(v)
    }
}

impl From<&str> for FieldValue {
    fn from(v: &str) -> Self {
        FieldValue::Text(v.to_owned())
    }
}

impl From<String> for FieldValue {
    fn from(v: String) -> Self {
        FieldValue::Text(v)
    }
}

impl From<Date> for FieldValue {
    fn from(v: Date) -> Self {
        FieldValue::Date(v)
    }
}

impl From<Timestamp> for FieldValue {
    fn from(v: Timestamp) -> Self {
        FieldValue::Timestamp(v)
    }
}

impl<T: Into<FieldValue>> From<Option<T>> for FieldValue {
    fn from(v: Option<T>) -> Self {
        v.map_or(FieldValue::Null, Into::into)
    }
}

pub fn format_date(d: Date) -> String {
    d.format(DATE_FORMAT).to_string()
}

pub fn format_timestamp(t: Timestamp) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}

/// Accepts `YYYY-MM-DD` or `MM-DD-YY`.
pub fn parse_date(raw: &str) -> Result<Date> {
    let s = raw.trim();
    NaiveDate::parse_from_str(s, DATE_FORMAT)
        .ok()
        .filter(|_| s.len() == 10 && s.as_bytes()[4] == b'-')
        .or_else(|| parse_short_date(s))
        .ok_or_else(|| Error::InvalidValue(format!("`{raw}` is not a date")))
}

fn parse_short_date(s: &str) -> Option<Date> {
    let mut parts = s.split('-');
    let (m, d, y) = (parts.next()?, parts.next()?, parts.next()?);
    if parts.next().is_some() || m.len() != 2 || d.len() != 2 || y.len() != 2 {
        return None;
    }
    let y: i32 = y.parse().ok()?;
    NaiveDate::from_ymd_opt(2000 + y, m.parse().ok()?, d.parse().ok()?)
}

/// Accepts `YYYY-MM-DDTHH:MM:SSZ` or `MM-DD-YY HH:MM:SS`.
///
/// The short form allows hour `24`, which rolls over to `00` of the next
/// day; the second tuple element then describes the rewrite.
pub fn parse_timestamp(raw: &str) -> Result<(Timestamp, Option<String>)> {
    let s = raw.trim();
    if let Ok(t) = NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT) {
        return Ok((t, None));
    }
    let bad = || Error::InvalidValue(format!("`{raw}` is not a timestamp"));
    let (date, time) = s.split_once(' ').ok_or_else(bad)?;
    let date = parse_short_date(date).ok_or_else(bad)?;
    let mut hms = time.split(':');
    let (h, m, sec) = (
        hms.next().ok_or_else(bad)?,
        hms.next().ok_or_else(bad)?,
        hms.next().ok_or_else(bad)?,
    );
    if hms.next().is_some() || [h, m, sec].iter().any(|p| p.len() != 2) {
        return Err(bad());
    }
    let h: u32 = h.parse().map_err(|_| bad())?;
    let m: u32 = m.parse().map_err(|_| bad())?;
    let sec: u32 = sec.parse().map_err(|_| bad())?;
    if h == 24 {
        let time = NaiveTime::from_hms_opt(0, m, sec).ok_or_else(bad)?;
        let next = date.checked_add_days(Days::new(1)).ok_or_else(bad)?;
        let t = next.and_time(time);
        let note = format!("`{raw}` has hour 24; stored as {}", format_timestamp(t));
        return Ok((t, Some(note)));
    }
    let time = NaiveTime::from_hms_opt(h, m, sec).ok_or_else(bad)?;
    Ok((date.and_time(time), None))
}

impl FromStr for FieldType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "integer" => FieldType::Integer,
            "float" => FieldType::Float,
            "text" => FieldType::Text,
            "date" => FieldType::Date,
            "timestamp" => FieldType::Timestamp,
            other => return Err(Error::InvalidValue(format!("unknown field type `{other}`"))),
        })
    }
}

/// Truncates to whole minutes.
pub fn floor_minute(t: Timestamp) -> Timestamp {
    t.with_second(0)
        .and_then(|t| t.with_nanosecond(0))
        .expect("zero seconds is always valid")
}

/// Convenience constructor used throughout tests and fixtures.
pub fn ymd(y: i32, m: u32, d: u32) -> Date {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid calendar date")
}

/// Convenience constructor used throughout tests and fixtures.
pub fn ymd_hms(y: i32, m: u32, d: u32, h: u32, mi: u32, s: u32) -> Timestamp {
    ymd(y, m, d).and_hms_opt(h, mi, s).expect("valid time of day")
}

pub(crate) fn month_start(d: Date) -> Date {
    NaiveDate::from_ymd_opt(d.year(), d.month(), 1).expect("day 1 exists")
}
