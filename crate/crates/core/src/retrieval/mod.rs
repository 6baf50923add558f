//! Date-range and entity retrieval, each as a plain scan and an
//! index-assisted lookup. Every query returns [`ScanStats`] so the two
//! forms can be compared by how many records they had to examine.

mod entity;
mod explode;
mod grain;

pub use entity::{build_entity_index, exhaustive_entity_search, lookup_entity, EntityIndex};
pub use explode::{row_explode, row_implode};
pub use grain::{build_grain_index, grain_code, lookup_date_range_gls, GrainEntry, GrainIndex, GrainSpec};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::table::{Record, Table};
use crate::value::Date;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ScanStats {
    /// Table records examined, including probes that ended the walk.
    pub records_touched: usize,
    pub results_returned: usize,
    /// Lookup-table entries compared while locating the jump-in point.
    pub index_comparisons: usize,
}

impl std::fmt::Display for ScanStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "records_touched={} results_returned={} index_comparisons={}",
            self.records_touched, self.results_returned, self.index_comparisons
        )
    }
}

/// Matching records with their 1-based ordinals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryResult {
    pub hits: Vec<(usize, Record)>,
    pub stats: ScanStats,
}

impl QueryResult {
    pub fn ordinals(&self) -> Vec<usize> {
        self.hits.iter().map(|(o, _)| *o).collect()
    }

    pub fn records(&self) -> Vec<&Record> {
        self.hits.iter().map(|(_, r)| r).collect()
    }
}

/// Length and commit position of the table an index was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexStamp {
    pub len: usize,
    pub commit: u64,
}

impl IndexStamp {
    pub fn of(table: &Table) -> Self {
        IndexStamp {
            len: table.len(),
            commit: table.commit_count(),
        }
    }

    pub fn check(&self, table: &Table) -> Result<()> {
        if *self == IndexStamp::of(table) {
            Ok(())
        } else {
            Err(self.stale(table))
        }
    }

    fn stale(&self, table: &Table) -> Error {
        Error::StaleIndex {
            indexed_len: self.len,
            indexed_commit: self.commit,
            table_len: table.len(),
            table_commit: table.commit_count(),
        }
    }

    /// Whether every commit since the stamp only appended records or
    /// rewrote fields other than `watched`. Returns the first new ordinal.
    fn appended_since(&self, table: &Table, watched: usize) -> Result<usize> {
        let log = table.commit_log();
        let clean = (self.commit as usize) <= log.len()
            && self.len <= table.len()
            && log[self.commit as usize..]
                .iter()
                .all(|c| c.removed == 0 && c.cleared == 0 && !c.fields_rewritten.contains(&watched));
        if clean {
            Ok(self.len + 1)
        } else {
            Err(self.stale(table))
        }
    }
}

fn date_position(table: &Table) -> Result<usize> {
    table.schema().date_position().ok_or(Error::NoDateColumn)
}

pub(crate) fn record_date(record: &Record, pos: usize) -> Date {
    record
        .get(pos)
        .as_date()
        .expect("schema guarantees a non-null date column")
}

/// Verifies ascending date order; reports the first ordinal that is
/// earlier than its predecessor.
pub fn check_date_sorted(table: &Table) -> Result<()> {
    let pos = date_position(table)?;
    let mut prev: Option<Date> = None;
    for (ordinal, record) in table.iter() {
        let d = record_date(record, pos);
        if prev.is_some_and(|p| d < p) {
            return Err(Error::UnsortedTable {
                field: table.schema().fields()[pos].name.clone(),
                ordinal,
            });
        }
        prev = Some(d);
    }
    Ok(())
}

fn check_range(start: Date, end: Date) -> Result<()> {
    if start > end {
        return Err(Error::InvalidValue(format!("range start {start} is after end {end}")));
    }
    Ok(())
}

/// First-occurrence scan: walks from ordinal 1, skipping records before
/// `start`, collecting through `end`, and stopping at the first record
/// past `end`.
pub fn scan_date_range(table: &Table, start: Date, end: Date) -> Result<QueryResult> {
    let pos = date_position(table)?;
    check_date_sorted(table)?;
    check_range(start, end)?;
    Ok(walk_from(table, pos, 1, start, end))
}

fn walk_from(table: &Table, pos: usize, from: usize, start: Date, end: Date) -> QueryResult {
    let mut out = QueryResult::default();
    for (ordinal, record) in table.iter().skip(from - 1) {
        out.stats.records_touched += 1;
        let d = record_date(record, pos);
        if d > end {
            break;
        }
        if d >= start {
            out.hits.push((ordinal, record.clone()));
        }
    }
    out.stats.results_returned = out.hits.len();
    out
}
