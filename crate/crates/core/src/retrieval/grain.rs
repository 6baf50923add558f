use std::fmt;
use std::str::FromStr;

use chrono::Datelike;

use super::{check_date_sorted, check_range, date_position, record_date, walk_from, IndexStamp, QueryResult};
use crate::error::{Error, Result};
use crate::table::Table;
use crate::value::{format_date, month_start, Date};

/// Time bucket used to label records in a grain lookup table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GrainSpec {
    /// `Q<quarter>M<month>`, e.g. `Q3M8` for August.
    QuarterMonth,
    /// `Y<year>M<month>`.
    Month,
    /// ISO date.
    Day,
}

impl GrainSpec {
    /// First day of the bucket containing `d`. Buckets order
    /// chronologically even when their codes repeat across years.
    pub fn bucket(self, d: Date) -> Date {
        match self {
            GrainSpec::QuarterMonth | GrainSpec::Month => month_start(d),
            GrainSpec::Day => d,
        }
    }

    /// Whether `d` is the first day of its bucket.
    pub fn is_aligned(self, d: Date) -> bool {
        self.bucket(d) == d
    }
}

pub fn grain_code(d: Date, grain: GrainSpec) -> String {
    match grain {
        GrainSpec::QuarterMonth => format!("Q{}M{}", d.month().div_ceil(3), d.month()),
        GrainSpec::Month => format!("Y{:04}M{}", d.year(), d.month()),
        GrainSpec::Day => format_date(d),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrainEntry {
    pub code: String,
    pub bucket: Date,
    pub start_ordinal: usize,
}

/// Lookup table from grain code to the first ordinal carrying it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrainIndex {
    grain: GrainSpec,
    entries: Vec<GrainEntry>,
    last_date: Option<Date>,
    stamp: IndexStamp,
}

pub fn build_grain_index(table: &Table, grain: GrainSpec) -> Result<GrainIndex> {
    check_date_sorted(table)?;
    let mut index = GrainIndex {
        grain,
        entries: Vec::new(),
        last_date: None,
        stamp: IndexStamp { len: 0, commit: 0 },
    };
    index.absorb(table, 1);
    Ok(index)
}

impl GrainIndex {
    pub fn grain(&self) -> GrainSpec {
        self.grain
    }

    pub fn entries(&self) -> &[GrainEntry] {
        &self.entries
    }

    /// `(code, start_ordinal)` pairs.
    pub fn pairs(&self) -> Vec<(&str, usize)> {
        self.entries
            .iter()
            .map(|e| (e.code.as_str(), e.start_ordinal))
            .collect()
    }

    pub fn stamp(&self) -> IndexStamp {
        self.stamp
    }

    fn absorb(&mut self, table: &Table, from: usize) {
        let pos = table.schema().date_position().expect("checked by caller");
        for (ordinal, record) in table.iter().skip(from - 1) {
            let d = record_date(record, pos);
            let bucket = self.grain.bucket(d);
            if self.entries.last().is_none_or(|e| e.bucket < bucket) {
                self.entries.push(GrainEntry {
                    code: grain_code(d, self.grain),
                    bucket,
                    start_ordinal: ordinal,
                });
            }
            self.last_date = Some(d);
        }
        self.stamp = IndexStamp::of(table);
    }

    /// Brings the index up to date after appends. Fails with
    /// `UnsortedTable` if an appended record is dated before the last
    /// indexed one, or `StaleIndex` if the table changed in any other way;
    /// both mean the index must be rebuilt.
    pub fn extend(&mut self, table: &Table) -> Result<()> {
        let pos = date_position(table)?;
        let from = self.stamp.appended_since(table, pos)?;
        let mut prev = self.last_date;
        for (ordinal, record) in table.iter().skip(from - 1) {
            let d = record_date(record, pos);
            if prev.is_some_and(|p| d < p) {
                return Err(Error::UnsortedTable {
                    field: table.schema().fields()[pos].name.clone(),
                    ordinal,
                });
            }
            prev = Some(d);
        }
        self.absorb(table, from);
        Ok(())
    }

    /// Full consistency check against `table`.
    pub fn verify(&self, table: &Table) -> Result<()> {
        self.stamp.check(table)?;
        let rebuilt = build_grain_index(table, self.grain)?;
        if rebuilt.entries != self.entries {
            return Err(Error::Disagreement("grain index entries differ from a rebuild".into()));
        }
        Ok(())
    }
}

/// Jumps to the first bucket at or after `start` using the lookup table,
/// then walks forward exactly like the scan does.
pub fn lookup_date_range_gls(table: &Table, index: &GrainIndex, start: Date, end: Date) -> Result<QueryResult> {
    index.stamp.check(table)?;
    let pos = date_position(table)?;
    check_range(start, end)?;
    let target = index.grain.bucket(start);
    let (mut lo, mut hi, mut comparisons) = (0, index.entries.len(), 0);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        comparisons += 1;
        if index.entries[mid].bucket < target {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    let mut out = match index.entries.get(lo) {
        Some(entry) => walk_from(table, pos, entry.start_ordinal, start, end),
        None => QueryResult::default(),
    };
    out.stats.index_comparisons = comparisons;
    Ok(out)
}

impl fmt::Display for GrainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GrainSpec::QuarterMonth => "quartermonth",
            GrainSpec::Month => "month",
            GrainSpec::Day => "day",
        })
    }
}

impl FromStr for GrainSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "quartermonth" | "quarter-month" | "qm" => Ok(GrainSpec::QuarterMonth),
            "month" => Ok(GrainSpec::Month),
            "day" => Ok(GrainSpec::Day),
            _ => Err(Error::InvalidValue(format!(
                "unknown grain `{s}` (expected quartermonth, month or day)"
            ))),
        }
    }
}
