//! Record-addition strategies: one at a time, one batch, fixed-size
//! partitions, and multi-threaded staging of either batch shape.
//!
//! Every strategy leaves the table with the original records followed by
//! the new records in input order. They differ only in how many commits
//! they perform and in what survives a failure: successive and partitioned
//! runs keep the commits made before the failing one, bulk runs are
//! all-or-nothing.

use std::fmt;
use std::num::NonZeroUsize;
use std::str::FromStr;
use std::thread;

use crate::error::{Error, Result};
use crate::schema::Schema;
use crate::table::{validate_records, Record, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertStrategy {
    Successive,
    Bulk,
    Partitioned { size: NonZeroUsize },
    Parallel { workers: NonZeroUsize, inner: BatchShape },
}

/// How a parallel run groups records into commits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchShape {
    Bulk,
    Partitioned { size: NonZeroUsize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct InsertOutcome {
    pub records_added: usize,
    pub commits: u64,
}

impl InsertStrategy {
    pub fn partitioned(size: usize) -> Result<Self> {
        Ok(InsertStrategy::Partitioned {
            size: positive(size, "partition size")?,
        })
    }

    pub fn parallel(workers: usize, inner: BatchShape) -> Result<Self> {
        Ok(InsertStrategy::Parallel {
            workers: positive(workers, "worker count")?,
            inner,
        })
    }

    /// Commits `insert` performs for `n` records.
    pub fn commit_count(&self, n: usize) -> u64 {
        let n = n as u64;
        match *self {
            InsertStrategy::Successive => n,
            InsertStrategy::Bulk => 1,
            InsertStrategy::Partitioned { size } => n.div_ceil(size.get() as u64),
            InsertStrategy::Parallel { .. } if n == 0 => 0,
            InsertStrategy::Parallel { inner, .. } => match inner {
                BatchShape::Bulk => 1,
                BatchShape::Partitioned { size } => n.div_ceil(size.get() as u64),
            },
        }
    }
}

/// Free-function form of [`InsertStrategy::commit_count`].
pub fn commit_count_of(strategy: &InsertStrategy, n: usize) -> u64 {
    strategy.commit_count(n)
}

fn positive(n: usize, what: &str) -> Result<NonZeroUsize> {
    NonZeroUsize::new(n).ok_or_else(|| Error::InvalidValue(format!("{what} must be at least 1")))
}

pub fn insert(table: &mut Table, records: Vec<Record>, strategy: InsertStrategy) -> Result<InsertOutcome> {
    let before = table.commit_count();
    let added = records.len();
    match strategy {
        InsertStrategy::Successive => {
            for record in records {
                table.append_committed(vec![record])?;
            }
        }
        InsertStrategy::Bulk => table.append_committed(records)?,
        InsertStrategy::Partitioned { size } => {
            let mut records = records.into_iter().peekable();
            while records.peek().is_some() {
                table.append_committed(records.by_ref().take(size.get()).collect())?;
            }
        }
        InsertStrategy::Parallel { workers, inner } => insert_parallel(table, records, workers.get(), inner)?,
    }
    Ok(InsertOutcome {
        records_added: added,
        commits: table.commit_count() - before,
    })
}

fn insert_parallel(table: &mut Table, records: Vec<Record>, workers: usize, inner: BatchShape) -> Result<()> {
    if records.is_empty() {
        return Ok(());
    }
    let segment_len = match inner {
        BatchShape::Bulk => records.len().div_ceil(workers),
        BatchShape::Partitioned { size } => size.get(),
    };
    let staged = stage(table.schema(), table.len(), split(records, segment_len), workers);
    match inner {
        BatchShape::Bulk => {
            let mut batch = Vec::new();
            for segment in staged {
                batch.extend(segment?);
            }
            table.append_prevalidated(batch);
        }
        BatchShape::Partitioned { .. } => {
            for segment in staged {
                table.append_prevalidated(segment?);
            }
        }
    }
    Ok(())
}

fn split(records: Vec<Record>, segment_len: usize) -> Vec<Vec<Record>> {
    let mut segments = Vec::with_capacity(records.len().div_ceil(segment_len));
    let mut records = records.into_iter().peekable();
    while records.peek().is_some() {
        segments.push(records.by_ref().take(segment_len).collect());
    }
    segments
}

/// Validates segments on up to `workers` threads and returns them in
/// sequence order, regardless of which thread finished first.
fn stage(schema: &Schema, base_len: usize, segments: Vec<Vec<Record>>, workers: usize) -> Vec<Result<Vec<Record>>> {
    let mut offsets = Vec::with_capacity(segments.len());
    let mut offset = base_len;
    for s in &segments {
        offsets.push(offset);
        offset += s.len();
    }
    let threads = workers.min(segments.len());
    let mut queues: Vec<Vec<(usize, usize, Vec<Record>)>> = (0..threads).map(|_| Vec::new()).collect();
    for (seq, (segment, offset)) in segments.into_iter().zip(offsets).enumerate() {
        queues[seq % threads].push((seq, offset, segment));
    }
    let mut slots: Vec<Option<Result<Vec<Record>>>> = Vec::new();
    thread::scope(|scope| {
        let handles: Vec<_> = queues
            .into_iter()
            .map(|queue| {
                scope.spawn(move || {
                    queue
                        .into_iter()
                        .map(|(seq, offset, segment)| {
                            let checked = validate_records(schema, &segment, offset).map(|()| segment);
                            (seq, checked)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        let results: Vec<_> = handles
            .into_iter()
            .flat_map(|h| h.join().expect("staging worker panicked"))
            .collect();
        slots.resize_with(results.len(), || None);
        for (seq, checked) in results {
            slots[seq] = Some(checked);
        }
    });
    slots.into_iter().map(|s| s.expect("every segment staged")).collect()
}

impl fmt::Display for BatchShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BatchShape::Bulk => f.write_str("bulk"),
            BatchShape::Partitioned { size } => write!(f, "partitioned:{size}"),
        }
    }
}

impl fmt::Display for InsertStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InsertStrategy::Successive => f.write_str("successive"),
            InsertStrategy::Bulk => f.write_str("bulk"),
            InsertStrategy::Partitioned { size } => write!(f, "partitioned:{size}"),
            InsertStrategy::Parallel { workers, inner } => write!(f, "parallel:{workers}:{inner}"),
        }
    }
}

fn parse_count(s: &str, what: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::InvalidValue(format!("{what} `{s}` is not a number")))
}

impl FromStr for BatchShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "bulk" => Ok(BatchShape::Bulk),
            Some(("partitioned", size)) => Ok(BatchShape::Partitioned {
                size: positive(parse_count(size, "partition size")?, "partition size")?,
            }),
            _ => Err(Error::InvalidValue(format!(
                "unknown batch shape `{s}` (expected bulk or partitioned:<size>)"
            ))),
        }
    }
}

impl FromStr for InsertStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "successive" => return Ok(InsertStrategy::Successive),
            "bulk" => return Ok(InsertStrategy::Bulk),
            _ => {}
        }
        if let Some(size) = s.strip_prefix("partitioned:") {
            return InsertStrategy::partitioned(parse_count(size, "partition size")?);
        }
        if let Some(rest) = s.strip_prefix("parallel:") {
            let (workers, inner) = rest
                .split_once(':')
                .ok_or_else(|| Error::InvalidValue(format!("`{s}` needs the form parallel:<workers>:<inner>")))?;
            return InsertStrategy::parallel(parse_count(workers, "worker count")?, inner.parse()?);
        }
        Err(Error::InvalidValue(format!(
            "unknown strategy `{s}` (expected successive, bulk, partitioned:<size> or parallel:<workers>:<inner>)"
        )))
    }
}
