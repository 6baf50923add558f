//! Warehouse syncing: entirety reload, key matching, last-sync pick-up
//! (LSP) and offset last-sync pick-up (OLSP), plus duplicate removal and
//! chained topologies.
//!
//! LSP appends source records strictly newer than the destination's
//! watermark. OLSP deliberately reaches back further: it re-reads every
//! source record stamped at or after `min(watermark, as_of - offset)`,
//! appends them, and then removes the duplicates this generates. `as_of`
//! is the run instant; it defaults to the newest source timestamp. The
//! `min` keeps the OLSP window a superset of the LSP window, so OLSP never
//! reads less than LSP would.

mod topology;

pub use topology::{run_pipeline, run_pipeline_files, Edge, Node, Role, Topology};

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use chrono::Duration;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{Changeset, Record, Table};
use crate::value::{format_timestamp, parse_timestamp, FieldType, FieldValue, Timestamp};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SyncTechnique {
    Entirety,
    Match { key: String },
    Lsp { ts: String },
    Olsp { ts: String, offset_days: u32 },
}

/// Latest timestamp present in a table, `None` when there is none.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SyncWatermark(pub Option<Timestamp>);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SyncReport {
    pub technique: SyncTechnique,
    /// Source records pulled into the run.
    pub records_read: usize,
    /// Net growth of the destination from newly appended source records.
    pub records_added: usize,
    /// Destination records dropped before loading (entirety only).
    pub records_deleted: usize,
    pub duplicates_removed: usize,
}

impl fmt::Display for SyncReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "technique={} records_read={} records_added={} records_deleted={} duplicates_removed={}",
            self.technique, self.records_read, self.records_added, self.records_deleted, self.duplicates_removed
        )
    }
}

/// Run-time inputs that are not part of the technique itself.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SyncOptions {
    /// Run instant. Timestamped techniques ignore source records stamped
    /// later than this; OLSP measures its offset back from it.
    pub as_of: Option<Timestamp>,
    /// Watermark recorded outside the destination. When unset, LSP and
    /// OLSP compute it from the destination.
    pub watermark: Option<SyncWatermark>,
}

/// Which columns decide that two records are duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DedupKey {
    WholeRecord,
    Field(String),
}

pub fn sync(source: &Table, dest: &mut Table, technique: &SyncTechnique) -> Result<SyncReport> {
    sync_with(source, dest, technique, SyncOptions::default())
}

pub fn sync_with(source: &Table, dest: &mut Table, technique: &SyncTechnique, opts: SyncOptions) -> Result<SyncReport> {
    source.schema().sync_compatible(dest.schema())?;
    let mut report = SyncReport {
        technique: technique.clone(),
        records_read: 0,
        records_added: 0,
        records_deleted: 0,
        duplicates_removed: 0,
    };
    match technique {
        SyncTechnique::Entirety => {
            report.records_read = source.len();
            report.records_deleted = dest.len();
            report.records_added = source.len();
            dest.commit(Changeset::new().clear().append_all(source.records().iter().cloned()))?;
        }
        SyncTechnique::Match { key } => {
            let pos = source.schema().require(key)?;
            let mut present: HashSet<FieldValue> = dest.records().iter().map(|r| r.get(pos).clone()).collect();
            let fresh: Vec<Record> = source
                .records()
                .iter()
                .filter(|r| present.insert(r.get(pos).clone()))
                .cloned()
                .collect();
            report.records_read = source.len();
            report.records_added = fresh.len();
            if !fresh.is_empty() {
                dest.append_committed(fresh)?;
            }
        }
        SyncTechnique::Lsp { ts } => {
            let pos = timestamp_column(source, ts)?;
            check_source_sorted(source, pos)?;
            let watermark = opts.watermark.map_or_else(|| watermark_of(dest, ts), Ok)?;
            let picked = pick(source, pos, opts.as_of, |t| match watermark.0 {
                None => true,
                Some(w) => t.is_some_and(|t| t > w),
            });
            report.records_read = picked.len();
            report.records_added = picked.len();
            if !picked.is_empty() {
                dest.append_committed(picked)?;
            }
        }
        SyncTechnique::Olsp { ts, offset_days } => {
            let pos = timestamp_column(source, ts)?;
            check_source_sorted(source, pos)?;
            let watermark = opts.watermark.map_or_else(|| watermark_of(dest, ts), Ok)?;
            let reference = opts.as_of.or(watermark_of(source, ts)?.0);
            let lower = match (watermark.0, reference) {
                (None, _) => None,
                (Some(w), None) => Some(w),
                (Some(w), Some(r)) => Some(w.min(r - Duration::days(i64::from(*offset_days)))),
            };
            let picked = pick(source, pos, opts.as_of, |t| match lower {
                None => true,
                Some(l) => t.is_some_and(|t| t >= l),
            });
            report.records_read = picked.len();
            if !picked.is_empty() {
                dest.append_committed(picked)?;
                report.duplicates_removed = dedup(dest, &DedupKey::WholeRecord)?;
            }
            report.records_added = report.records_read - report.duplicates_removed;
        }
    }
    Ok(report)
}

fn pick(source: &Table, pos: usize, as_of: Option<Timestamp>, keep: impl Fn(Option<Timestamp>) -> bool) -> Vec<Record> {
    source
        .records()
        .iter()
        .filter(|r| {
            let t = r.get(pos).as_timestamp();
            let visible = match (as_of, t) {
                (Some(limit), Some(t)) => t <= limit,
                _ => true,
            };
            visible && keep(t)
        })
        .cloned()
        .collect()
}

fn timestamp_column(table: &Table, name: &str) -> Result<usize> {
    let pos = table.schema().require(name)?;
    let field = &table.schema().fields()[pos];
    if field.kind != FieldType::Timestamp {
        return Err(Error::WrongColumnType {
            field: name.to_owned(),
            actual: field.kind.to_string(),
            expected: FieldType::Timestamp.to_string(),
        });
    }
    Ok(pos)
}

fn check_source_sorted(source: &Table, pos: usize) -> Result<()> {
    let mut prev: Option<Timestamp> = None;
    for (ordinal, record) in source.iter() {
        let t = record.get(pos).as_timestamp();
        if t < prev {
            return Err(Error::UnsortedSource {
                field: source.schema().fields()[pos].name.clone(),
                ordinal,
            });
        }
        prev = t;
    }
    Ok(())
}

/// Maximum non-null value of timestamp column `ts`.
pub fn watermark_of(table: &Table, ts: &str) -> Result<SyncWatermark> {
    let pos = timestamp_column(table, ts)?;
    Ok(SyncWatermark(
        table.records().iter().filter_map(|r| r.get(pos).as_timestamp()).max(),
    ))
}

/// Removes every record whose key already appeared earlier in the table.
/// Survivors keep their relative order. Returns the number removed; a
/// table without duplicates is left untouched and no commit is made.
pub fn dedup(table: &mut Table, key: &DedupKey) -> Result<usize> {
    let pos = match key {
        DedupKey::WholeRecord => None,
        DedupKey::Field(name) => Some(table.schema().require(name)?),
    };
    let mut seen = HashSet::new();
    let mut changes = Changeset::new();
    let mut removed = 0;
    for (ordinal, record) in table.iter() {
        let fresh = match pos {
            None => seen.insert(record.values()),
            Some(p) => seen.insert(std::slice::from_ref(record.get(p))),
        };
        if !fresh {
            changes = changes.remove(ordinal);
            removed += 1;
        }
    }
    if removed > 0 {
        table.commit(changes)?;
    }
    Ok(removed)
}

/// A watermark kept in a file next to the tables rather than derived from
/// the destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExternalWatermark;

impl ExternalWatermark {
    pub fn load(path: &Path) -> Result<SyncWatermark> {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(SyncWatermark(None)),
            Err(e) => return Err(Error::io(path, e)),
        };
        let text = text.trim();
        if text.is_empty() {
            return Ok(SyncWatermark(None));
        }
        let (t, _) = parse_timestamp(text).map_err(|e| Error::Format {
            path: path.to_owned(),
            line: 1,
            detail: e.to_string(),
        })?;
        Ok(SyncWatermark(Some(t)))
    }

    pub fn store(path: &Path, watermark: SyncWatermark) -> Result<()> {
        let text = watermark.0.map(format_timestamp).unwrap_or_default();
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

impl fmt::Display for SyncTechnique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyncTechnique::Entirety => f.write_str("entirety"),
            SyncTechnique::Match { key } => write!(f, "match:{key}"),
            SyncTechnique::Lsp { ts } => write!(f, "lsp:{ts}"),
            SyncTechnique::Olsp { ts, offset_days } => write!(f, "olsp:{ts}:{offset_days}"),
        }
    }
}

impl FromStr for SyncTechnique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidValue(format!(
                "unknown technique `{s}` (expected entirety, match:<key>, lsp:<tscol> or olsp:<tscol>:<days>)"
            ))
        };
        if s == "entirety" {
            return Ok(SyncTechnique::Entirety);
        }
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "match" if !rest.is_empty() => Ok(SyncTechnique::Match { key: rest.into() }),
            "lsp" if !rest.is_empty() => Ok(SyncTechnique::Lsp { ts: rest.into() }),
            "olsp" => {
                let (ts, days) = rest.rsplit_once(':').ok_or_else(bad)?;
                let offset_days: u32 = days.parse().map_err(|_| bad())?;
                if ts.is_empty() || offset_days == 0 {
                    return Err(Error::InvalidValue(format!(
                        "`{s}`: olsp needs a column and an offset of at least one day"
                    )));
                }
                Ok(SyncTechnique::Olsp {
                    ts: ts.into(),
                    offset_days,
                })
            }
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for SyncTechnique {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SyncTechnique> for String {
    fn from(t: SyncTechnique) -> Self {
        t.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{Designations, Field, Schema};
    use crate::value::ymd_hms;

    fn schema() -> Schema {
        Schema::new(
            vec![
                Field::new("id", FieldType::Integer),
                Field::nullable("ts", FieldType::Timestamp),
            ],
            Designations::default(),
        )
        .unwrap()
    }

    fn day(i: i64) -> Record {
        let t = ymd_hms(2018, 8, 1, 12, 0, 0) + Duration::days(i);
        Record::new(vec![i.into(), t.into()])
    }

    fn table(ids: impl IntoIterator<Item = i64>) -> Table {
        let mut t = Table::new(schema());
        t.append_committed(ids.into_iter().map(day).collect()).unwrap();
        t
    }

    #[test]
    fn technique_text_forms() {
        for s in ["entirety", "match:id", "lsp:ts", "olsp:ts:3", "olsp:a:b:7"] {
            assert_eq!(s.parse::<SyncTechnique>().unwrap().to_string(), s);
        }
        for s in ["", "match:", "lsp", "olsp:ts", "olsp:ts:0", "olsp::3", "full"] {
            assert!(s.parse::<SyncTechnique>().is_err(), "{s}");
        }
    }

    #[test]
    fn watermark_is_the_maximum() {
        assert_eq!(watermark_of(&Table::new(schema()), "ts").unwrap(), SyncWatermark(None));
        let mut t = table([3, 1, 2]);
        t.append_committed(vec![Record::new(vec![9.into(), FieldValue::Null])])
            .unwrap();
        assert_eq!(watermark_of(&t, "ts").unwrap().0, day(3).get(1).as_timestamp());
        assert!(matches!(watermark_of(&t, "nope"), Err(Error::UnknownField(_))));
        assert!(matches!(watermark_of(&t, "id"), Err(Error::WrongColumnType { .. })));
    }

    #[test]
    fn dedup_keeps_first_occurrence() {
        let mut t = table([1, 2, 2, 3]);
        assert_eq!(dedup(&mut t, &DedupKey::WholeRecord).unwrap(), 1);
        assert!(t.contents_eq(&table([1, 2, 3])));
        let commits = t.commit_count();
        assert_eq!(dedup(&mut t, &DedupKey::WholeRecord).unwrap(), 0);
        assert_eq!(t.commit_count(), commits);
        assert!(matches!(
            dedup(&mut t, &DedupKey::Field("x".into())),
            Err(Error::UnknownField(_))
        ));
    }

    #[test]
    fn lsp_adds_only_newer_records() {
        let source = table(1..=5);
        let mut dest = table(1..=4);
        let r = sync(&source, &mut dest, &"lsp:ts".parse().unwrap()).unwrap();
        assert_eq!((r.records_read, r.records_added), (1, 1));
        assert!(dest.contents_eq(&source));
    }

    #[test]
    fn olsp_window_is_measured_from_the_run_instant() {
        let source = table(1..=10);
        let mut dest = table(1..=7);
        let r = sync(&source, &mut dest, &"olsp:ts:3".parse().unwrap()).unwrap();
        assert_eq!((r.records_read, r.duplicates_removed, r.records_added), (4, 1, 3));
        assert!(dest.contents_eq(&source));
    }

    #[test]
    fn olsp_never_reads_less_than_lsp() {
        let source = table(1..=10);
        let mut dest = table(1..=2);
        let r = sync(&source, &mut dest, &"olsp:ts:3".parse().unwrap()).unwrap();
        assert_eq!((r.records_read, r.duplicates_removed), (9, 1));
        assert!(dest.contents_eq(&source));
    }

    #[test]
    fn as_of_hides_future_records() {
        let source = table(1..=10);
        let mut dest = Table::new(schema());
        let opts = SyncOptions {
            as_of: day(4).get(1).as_timestamp(),
            ..Default::default()
        };
        let r = sync_with(&source, &mut dest, &"lsp:ts".parse().unwrap(), opts).unwrap();
        assert_eq!(r.records_added, 4);
    }

    #[test]
    fn unsorted_source_and_incompatible_schema() {
        let source = table([2, 1]);
        let mut dest = Table::new(schema());
        assert!(matches!(
            sync(&source, &mut dest, &"lsp:ts".parse().unwrap()),
            Err(Error::UnsortedSource { ordinal: 2, .. })
        ));
        let other = Table::new(
            Schema::new(
                vec![
                    Field::new("id", FieldType::Text),
                    Field::nullable("ts", FieldType::Timestamp),
                ],
                Designations::default(),
            )
            .unwrap(),
        );
        assert!(matches!(
            sync(&other, &mut dest, &SyncTechnique::Entirety),
            Err(Error::SchemaIncompatible(_))
        ));
    }

    #[test]
    fn match_skips_existing_keys() {
        let source = table(1..=5);
        let mut dest = table([2, 4]);
        let r = sync(&source, &mut dest, &"match:id".parse().unwrap()).unwrap();
        assert_eq!((r.records_read, r.records_added), (5, 3));
        let ids: Vec<String> = dest.records().iter().map(|r| r.get(0).to_string()).collect();
        assert_eq!(ids, ["2", "4", "1", "3", "5"]);
    }

    #[test]
    fn external_watermark_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("wm.txt");
        assert_eq!(ExternalWatermark::load(&path).unwrap(), SyncWatermark(None));
        let w = SyncWatermark(Some(ymd_hms(2018, 8, 23, 0, 0, 0)));
        ExternalWatermark::store(&path, w).unwrap();
        assert_eq!(ExternalWatermark::load(&path).unwrap(), w);
    }
}
