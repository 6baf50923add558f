//! Brute-force oracles and random generators shared by the integration
//! tests. Nothing here calls the code paths it is used to check.

#![allow(dead_code)]

use std::collections::BTreeSet;

use chrono::{Datelike, Duration, NaiveDate, Timelike};
use grainstore::{Designations, Field, FieldType, FieldValue, Record, Schema, Table, Timestamp};
use rand::Rng;

pub const HORIZON_DAYS: i64 = 1461;

/// Cron fields expanded straight from the token rules.
pub struct OracleCron {
    sets: Vec<BTreeSet<u32>>,
    dom_restricted: bool,
    dow_restricted: bool,
}

const BOUNDS: [(u32, u32); 5] = [(0, 59), (0, 23), (1, 31), (1, 12), (0, 6)];

fn expand(field: &str, (lo, hi): (u32, u32)) -> BTreeSet<u32> {
    let mut set = BTreeSet::new();
    for atom in field.split(',') {
        let (range, step) = match atom.find('/') {
            Some(i) => (&atom[..i], atom[i + 1..].parse::<u32>().unwrap()),
            None => (atom, 1),
        };
        let (a, b) = if range == "*" {
            (lo, hi)
        } else if let Some(i) = range.find('-') {
            (range[..i].parse().unwrap(), range[i + 1..].parse().unwrap())
        } else {
            let v = range.parse().unwrap();
            (v, v)
        };
        let mut v = a;
        while v <= b {
            set.insert(v);
            v += step;
        }
    }
    set
}

impl OracleCron {
    pub fn new(expr: &str) -> Self {
        let fields: Vec<&str> = expr.split(' ').filter(|f| !f.is_empty()).collect();
        assert_eq!(fields.len(), 5);
        OracleCron {
            sets: fields.iter().zip(BOUNDS).map(|(f, b)| expand(f, b)).collect(),
            dom_restricted: fields[2] != "*" && fields[2] != "*/1",
            dow_restricted: fields[4] != "*" && fields[4] != "*/1",
        }
    }

    pub fn set(&self, i: usize) -> Vec<u32> {
        self.sets[i].iter().copied().collect()
    }

    fn day_ok(&self, d: NaiveDate) -> bool {
        let dom = self.sets[2].contains(&d.day());
        let dow = self.sets[4].contains(&d.weekday().num_days_from_sunday());
        let month = self.sets[3].contains(&d.month());
        let day = if self.dom_restricted && self.dow_restricted {
            dom || dow
        } else {
            (!self.dom_restricted || dom) && (!self.dow_restricted || dow)
        };
        month && day
    }

    pub fn matches(&self, t: Timestamp) -> bool {
        self.day_ok(t.date()) && self.sets[1].contains(&t.hour()) && self.sets[0].contains(&t.minute())
    }

    /// Minute-by-minute scan of `(after, after + horizon]`. Days whose date
    /// fails the day and month clauses cannot contain a matching minute and
    /// are stepped over whole.
    pub fn next_after(&self, after: Timestamp) -> Option<Timestamp> {
        let limit = after + Duration::days(HORIZON_DAYS);
        let mut t = after.with_second(0).unwrap().with_nanosecond(0).unwrap() + Duration::minutes(1);
        while t <= limit {
            if !self.day_ok(t.date()) {
                t = t.date().succ_opt().unwrap().and_hms_opt(0, 0, 0).unwrap();
                continue;
            }
            if self.matches(t) {
                return Some(t);
            }
            t += Duration::minutes(1);
        }
        None
    }
}

/// Which token kinds a generated expression uses.
#[derive(Default, Debug, Clone, Copy)]
pub struct TokenUse {
    pub list: bool,
    pub range: bool,
    pub step: bool,
    pub star: bool,
}

fn random_atom(rng: &mut impl Rng, (lo, hi): (u32, u32), used: &mut TokenUse) -> String {
    match rng.gen_range(0..5) {
        0 => {
            used.star = true;
            "*".into()
        }
        1 => {
            used.star = true;
            used.step = true;
            format!("*/{}", rng.gen_range(1..=(hi - lo + 1).min(15)))
        }
        2 => rng.gen_range(lo..=hi).to_string(),
        3 => {
            used.range = true;
            let a = rng.gen_range(lo..=hi);
            let b = rng.gen_range(a..=hi);
            format!("{a}-{b}")
        }
        _ => {
            used.range = true;
            used.step = true;
            let a = rng.gen_range(lo..=hi);
            let b = rng.gen_range(a..=hi);
            format!("{a}-{b}/{}", rng.gen_range(1..=10))
        }
    }
}

/// A random valid expression. Day-of-month and month lean towards `*` so
/// most expressions fire well inside the horizon.
pub fn random_cron(rng: &mut impl Rng) -> (String, TokenUse) {
    let mut used = TokenUse::default();
    let fields: Vec<String> = BOUNDS
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            if (i == 2 || i == 3) && rng.gen_bool(0.5) {
                used.star = true;
                return "*".into();
            }
            let n = if rng.gen_bool(0.3) { rng.gen_range(2..=3) } else { 1 };
            if n > 1 {
                used.list = true;
            }
            (0..n)
                .map(|_| random_atom(rng, b, &mut used))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    (fields.join(" "), used)
}

pub fn random_instant(rng: &mut impl Rng) -> Timestamp {
    let base = NaiveDate::from_ymd_opt(2016, 1, 1)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap();
    base + Duration::seconds(rng.gen_range(0..10 * 365 * 86_400))
}

/// Schema for retrieval trials: ordinal-free, with a key and a date.
pub fn dated_schema() -> Schema {
    Schema::new(
        vec![
            Field::new("id", FieldType::Integer),
            Field::nullable("who", FieldType::Text),
            Field::new("day", FieldType::Date),
        ],
        Designations {
            key_column: Some("who".into()),
            date_column: Some("day".into()),
            ..Default::default()
        },
    )
    .unwrap()
}

/// Date-sorted table spanning a few months with uneven days (including
/// empty days and bursts) and a small key pool with some NULL keys.
pub fn random_dated_table(rng: &mut impl Rng, n: usize) -> Table {
    let mut day = NaiveDate::from_ymd_opt(2018, rng.gen_range(1..=12), rng.gen_range(1..=28)).unwrap();
    let keys = rng.gen_range(1..=20);
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        if rng.gen_bool(0.2) {
            day += Duration::days(rng.gen_range(1..=6));
        }
        let who: FieldValue = if rng.gen_bool(0.05) {
            FieldValue::Null
        } else {
            format!("k{}", rng.gen_range(0..keys)).into()
        };
        records.push(Record::new(vec![(i as i64).into(), who, day.into()]));
    }
    let mut t = Table::new(dated_schema());
    t.append_committed(records).unwrap();
    t
}

/// Ordinals whose date lies in `[start, end]`, by filtering every record.
pub fn range_oracle(table: &Table, start: NaiveDate, end: NaiveDate) -> Vec<usize> {
    let pos = table.schema().date_position().unwrap();
    table
        .records()
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            let d = r.get(pos).as_date().unwrap();
            start <= d && d <= end
        })
        .map(|(i, _)| i + 1)
        .collect()
}

pub fn entity_oracle(table: &Table, key: &FieldValue) -> Vec<usize> {
    let pos = table.schema().key_position().unwrap();
    (1..=table.len())
        .filter(|&o| table.records()[o - 1].get(pos) == key)
        .collect()
}

/// Quadratic duplicate removal: keep a record iff no earlier record is
/// equal to it.
pub fn dedup_oracle(records: &[Record]) -> Vec<Record> {
    records
        .iter()
        .enumerate()
        .filter(|(i, r)| !records[..*i].contains(r))
        .map(|(_, r)| r.clone())
        .collect()
}

pub fn has_duplicates(records: &[Record]) -> bool {
    dedup_oracle(records).len() != records.len()
}
