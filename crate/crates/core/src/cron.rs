//! Five-field numeric cron expressions: `minute hour day-of-month month
//! day-of-week`. Each field is a comma list of `*`, `N` or `N-M`, where
//! `*` and ranges may carry a `/step`. Day-of-week runs 0 (Sunday) to 6.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate, Timelike};

use crate::error::{Error, Result};
use crate::value::{floor_minute, format_timestamp, Timestamp};

/// How far past `after` [`next_fire`] searches: four years, leap day
/// included.
pub const HORIZON_DAYS: i64 = 1461;

struct FieldSpec {
    name: &'static str,
    min: u32,
    max: u32,
}

const FIELDS: [FieldSpec; 5] = [
    FieldSpec {
        name: "minute",
        min: 0,
        max: 59,
    },
    FieldSpec {
        name: "hour",
        min: 0,
        max: 23,
    },
    FieldSpec {
        name: "day-of-month",
        min: 1,
        max: 31,
    },
    FieldSpec {
        name: "month",
        min: 1,
        max: 12,
    },
    FieldSpec {
        name: "day-of-week",
        min: 0,
        max: 6,
    },
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CronSchedule {
    expr: String,
    sets: [u64; 5],
    dom_restricted: bool,
    dow_restricted: bool,
}

fn members(bits: u64) -> Vec<u32> {
    (0..64).filter(|b| bits & (1 << b) != 0).collect()
}

impl CronSchedule {
    pub fn minutes(&self) -> Vec<u32> {
        members(self.sets[0])
    }

    pub fn hours(&self) -> Vec<u32> {
        members(self.sets[1])
    }

    pub fn days_of_month(&self) -> Vec<u32> {
        members(self.sets[2])
    }

    pub fn months(&self) -> Vec<u32> {
        members(self.sets[3])
    }

    pub fn days_of_week(&self) -> Vec<u32> {
        members(self.sets[4])
    }

    pub fn dom_restricted(&self) -> bool {
        self.dom_restricted
    }

    pub fn dow_restricted(&self) -> bool {
        self.dow_restricted
    }

    fn has(&self, field: usize, v: u32) -> bool {
        self.sets[field] & (1 << v) != 0
    }

    fn day_matches(&self, d: NaiveDate) -> bool {
        let dom = self.has(2, d.day());
        let dow = self.has(4, d.weekday().num_days_from_sunday());
        match (self.dom_restricted, self.dow_restricted) {
            (true, true) => dom || dow,
            (true, false) => dom,
            (false, true) => dow,
            (false, false) => true,
        }
    }

    /// Whether the schedule fires in the minute containing `t`.
    pub fn matches(&self, t: Timestamp) -> bool {
        self.has(0, t.minute()) && self.has(1, t.hour()) && self.has(3, t.month()) && self.day_matches(t.date())
    }

    /// The first minute strictly after `after` at which the schedule fires.
    pub fn next_fire(&self, after: Timestamp) -> Result<Timestamp> {
        let limit = after + Duration::days(HORIZON_DAYS);
        let mut t = floor_minute(after) + Duration::minutes(1);
        while t <= limit {
            if !self.has(3, t.month()) {
                let (y, m) = if t.month() == 12 {
                    (t.year() + 1, 1)
                } else {
                    (t.year(), t.month() + 1)
                };
                t = NaiveDate::from_ymd_opt(y, m, 1)
                    .expect("valid month start")
                    .and_time(Default::default());
                continue;
            }
            if !self.day_matches(t.date()) {
                t = (t.date() + Duration::days(1)).and_time(Default::default());
                continue;
            }
            if !self.has(1, t.hour()) {
                t = floor_minute(t) - Duration::minutes(i64::from(t.minute())) + Duration::hours(1);
                continue;
            }
            match (t.minute()..60).find(|&m| self.has(0, m)) {
                Some(m) => {
                    t += Duration::minutes(i64::from(m - t.minute()));
                    if t <= limit {
                        return Ok(t);
                    }
                }
                None => t += Duration::minutes(i64::from(60 - t.minute())),
            }
        }
        Err(Error::NoFireWithinHorizon {
            after: format_timestamp(after),
        })
    }
}

pub fn parse_cron(expr: &str) -> Result<CronSchedule> {
    expr.parse()
}

pub fn matches(schedule: &CronSchedule, t: Timestamp) -> bool {
    schedule.matches(t)
}

pub fn next_fire(schedule: &CronSchedule, after: Timestamp) -> Result<Timestamp> {
    schedule.next_fire(after)
}

fn field_error(index: usize, reason: impl Into<String>) -> Error {
    Error::InvalidCronExpression {
        field: index + 1,
        name: FIELDS.get(index).map_or("extra", |f| f.name),
        reason: reason.into(),
    }
}

fn parse_value(index: usize, spec: &FieldSpec, raw: &str) -> Result<u32> {
    if raw.is_empty() || !raw.bytes().all(|b| b.is_ascii_digit()) {
        return Err(field_error(index, format!("`{raw}` is not a number")));
    }
    match raw.parse::<u32>() {
        Ok(v) if (spec.min..=spec.max).contains(&v) => Ok(v),
        _ => Err(field_error(
            index,
            format!("value {raw} out of range {}-{}", spec.min, spec.max),
        )),
    }
}

fn parse_field(index: usize, text: &str) -> Result<u64> {
    let spec = &FIELDS[index];
    let mut bits = 0u64;
    for element in text.split(',') {
        if element.is_empty() {
            return Err(field_error(index, "empty list element"));
        }
        let (base, step) = match element.split_once('/') {
            None => (element, None),
            Some((base, step)) => {
                if step.is_empty() || !step.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(field_error(index, format!("step `{step}` is not a number")));
                }
                let step: u32 = step.parse().unwrap_or(u32::MAX);
                if step == 0 {
                    return Err(field_error(index, "zero step"));
                }
                (base, Some(step))
            }
        };
        let (lo, hi) = if base == "*" {
            (spec.min, spec.max)
        } else if let Some((a, b)) = base.split_once('-') {
            let (a, b) = (parse_value(index, spec, a)?, parse_value(index, spec, b)?);
            if a > b {
                return Err(field_error(index, format!("reversed range {a}-{b}")));
            }
            (a, b)
        } else {
            if step.is_some() {
                return Err(field_error(index, format!("step on single value `{element}`")));
            }
            let v = parse_value(index, spec, base)?;
            (v, v)
        };
        let step = step.unwrap_or(1) as usize;
        for v in (lo..=hi).step_by(step) {
            bits |= 1 << v;
        }
    }
    Ok(bits)
}

impl FromStr for CronSchedule {
    type Err = Error;

    fn from_str(expr: &str) -> Result<Self> {
        let fields: Vec<&str> = expr.split_whitespace().collect();
        if fields.len() != 5 {
            let index = fields.len().min(5);
            return Err(field_error(index, format!("expected 5 fields, found {}", fields.len())));
        }
        let mut sets = [0u64; 5];
        for (i, text) in fields.iter().enumerate() {
            sets[i] = parse_field(i, text)?;
        }
        let restricted = |s: &str| s != "*" && s != "*/1";
        Ok(CronSchedule {
            expr: fields.join(" "),
            sets,
            dom_restricted: restricted(fields[2]),
            dow_restricted: restricted(fields[4]),
        })
    }
}

impl fmt::Display for CronSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.expr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::ymd_hms;

    fn field_of(expr: &str) -> usize {
        match parse_cron(expr) {
            Err(Error::InvalidCronExpression { field, .. }) => field,
            other => panic!("{expr}: {other:?}"),
        }
    }

    #[test]
    fn expands_sets() {
        let s = parse_cron("*/15 0 1,15 * 1-5").unwrap();
        assert_eq!(s.minutes(), [0, 15, 30, 45]);
        assert_eq!(s.hours(), [0]);
        assert_eq!(s.days_of_month(), [1, 15]);
        assert_eq!(s.months(), (1..=12).collect::<Vec<_>>());
        assert_eq!(s.days_of_week(), [1, 2, 3, 4, 5]);
        assert!(s.dom_restricted() && s.dow_restricted());
        let all = parse_cron("* * * * */1").unwrap();
        assert!(!all.dom_restricted() && !all.dow_restricted());
        assert_eq!(parse_cron("10-40/10 * * * *").unwrap().minutes(), [10, 20, 30, 40]);
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(field_of("61 * * * *"), 1);
        assert_eq!(field_of("0 24 * * *"), 2);
        assert_eq!(field_of("* * 0 * *"), 3);
        assert_eq!(field_of("* * * 5-2 *"), 4);
        assert_eq!(field_of("* * * * 7"), 5);
        assert_eq!(field_of("*/0 * * * *"), 1);
        assert_eq!(field_of("1,,2 * * * *"), 1);
        assert_eq!(field_of("5/2 * * * *"), 1);
        assert_eq!(field_of("* * * *"), 5);
        assert_eq!(field_of("* * * * * *"), 6);
        assert_eq!(field_of(""), 1);
        assert_eq!(field_of("a * * * *"), 1);
    }

    #[test]
    fn matching_and_next_fire() {
        let friday_6th = ymd_hms(2018, 7, 6, 0, 0, 0);
        assert!(parse_cron("0 0 13 * 5").unwrap().matches(friday_6th));
        let s = parse_cron("30 4 1 1 *").unwrap();
        assert!(s.matches(ymd_hms(2018, 1, 1, 4, 30, 0)));
        assert!(!s.matches(ymd_hms(2018, 1, 1, 4, 31, 0)));
        let daily = parse_cron("0 0 * * *").unwrap();
        assert_eq!(
            daily.next_fire(ymd_hms(2018, 8, 23, 23, 59, 0)).unwrap(),
            ymd_hms(2018, 8, 24, 0, 0, 0)
        );
        assert_eq!(
            daily.next_fire(ymd_hms(2018, 8, 24, 0, 0, 0)).unwrap(),
            ymd_hms(2018, 8, 25, 0, 0, 0)
        );
        assert_eq!(
            parse_cron("*/15 * * * *")
                .unwrap()
                .next_fire(ymd_hms(2018, 8, 24, 10, 7, 31))
                .unwrap(),
            ymd_hms(2018, 8, 24, 10, 15, 0)
        );
        assert!(matches!(
            parse_cron("0 0 31 2 *").unwrap().next_fire(friday_6th),
            Err(Error::NoFireWithinHorizon { .. })
        ));
        assert_eq!(
            parse_cron("0 0 29 2 *")
                .unwrap()
                .next_fire(ymd_hms(2018, 3, 1, 0, 0, 0))
                .unwrap(),
            ymd_hms(2020, 2, 29, 0, 0, 0)
        );
    }
}
