//! In-memory tables and the commit primitive.
//!
//! Every mutation goes through [`Table::commit`] (or its append-only
//! shorthand [`Table::append_committed`]). A commit validates the whole
//! changeset first and then applies it, so a failed commit leaves the table
//! untouched. Ordinals are 1-based positions.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::schema::Schema;
use crate::value::FieldValue;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Record(Vec<FieldValue>);

impl Record {
    pub fn new(values: Vec<FieldValue>) -> Self {
        Record(values)
    }

    pub fn values(&self) -> &[FieldValue] {
        &self.0
    }

    pub fn get(&self, pos: usize) -> &FieldValue {
        &self.0[pos]
    }

    pub fn set(&mut self, pos: usize, value: FieldValue) {
        self.0[pos] = value;
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_values(self) -> Vec<FieldValue> {
        self.0
    }
}

impl FromIterator<FieldValue> for Record {
    fn from_iter<I: IntoIterator<Item = FieldValue>>(iter: I) -> Self {
        Record(iter.into_iter().collect())
    }
}

/// What one commit did.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CommitEvent {
    pub appended: usize,
    pub overwritten: usize,
    pub removed: usize,
    /// Records dropped by a whole-table clear.
    pub cleared: usize,
    /// Field positions whose value changed in some overwritten record.
    pub fields_rewritten: BTreeSet<usize>,
}

impl CommitEvent {
    /// True when the commit only added records at the end.
    pub fn is_append_only(&self) -> bool {
        self.removed == 0 && self.cleared == 0 && self.fields_rewritten.is_empty()
    }
}

/// A batch of changes applied atomically by [`Table::commit`].
///
/// Application order: clear, overwrites and removals (both addressed by
/// ordinals of the pre-commit table), then appends.
#[derive(Debug, Clone, Default)]
pub struct Changeset {
    clear: bool,
    overwrites: Vec<(usize, Record)>,
    removals: Vec<usize>,
    appends: Vec<Record>,
}

impl Changeset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(mut self) -> Self {
        self.clear = true;
        self
    }

    pub fn overwrite(mut self, ordinal: usize, record: Record) -> Self {
        self.overwrites.push((ordinal, record));
        self
    }

    pub fn remove(mut self, ordinal: usize) -> Self {
        self.removals.push(ordinal);
        self
    }

    pub fn append(mut self, record: Record) -> Self {
        self.appends.push(record);
        self
    }

    pub fn append_all(mut self, records: impl IntoIterator<Item = Record>) -> Self {
        self.appends.extend(records);
        self
    }

    pub fn is_empty(&self) -> bool {
        !self.clear && self.overwrites.is_empty() && self.removals.is_empty() && self.appends.is_empty()
    }
}

/// Ordered records under a schema, plus a log of commit events.
#[derive(Debug, Clone)]
pub struct Table {
    schema: Schema,
    records: Vec<Record>,
    commits: Vec<CommitEvent>,
}

impl Table {
    pub fn new(schema: Schema) -> Self {
        Table {
            schema,
            records: Vec::new(),
            commits: Vec::new(),
        }
    }

    /// Builds a table from already-stored records without logging a commit.
    pub(crate) fn from_stored(schema: Schema, records: Vec<Record>) -> Self {
        Table {
            schema,
            records,
            commits: Vec::new(),
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn commit_count(&self) -> u64 {
        self.commits.len() as u64
    }

    pub fn commit_log(&self) -> &[CommitEvent] {
        &self.commits
    }

    /// Record at a 1-based ordinal.
    pub fn read(&self, ordinal: usize) -> Result<&Record> {
        ordinal
            .checked_sub(1)
            .and_then(|i| self.records.get(i))
            .ok_or(Error::OutOfRange {
                ordinal,
                len: self.len(),
            })
    }

    /// `(ordinal, record)` pairs in table order.
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (usize, &Record)> + ExactSizeIterator {
        self.records.iter().enumerate().map(|(i, r)| (i + 1, r))
    }

    /// Same schema and same records in the same order. Commit history is
    /// not compared.
    pub fn contents_eq(&self, other: &Table) -> bool {
        self.schema == other.schema && self.records == other.records
    }

    pub fn append_committed(&mut self, records: Vec<Record>) -> Result<()> {
        self.validate_batch(&records, self.len())?;
        self.append_prevalidated(records);
        Ok(())
    }

    /// Validates `records` as if they were appended after `base_len`
    /// records; errors name the ordinal the record would have had.
    pub(crate) fn validate_batch(&self, records: &[Record], base_len: usize) -> Result<()> {
        validate_records(&self.schema, records, base_len)
    }

    pub(crate) fn append_prevalidated(&mut self, records: Vec<Record>) {
        let appended = records.len();
        self.records.extend(records);
        self.commits.push(CommitEvent {
            appended,
            ..Default::default()
        });
    }

    /// Applies `changes` atomically and logs one commit event.
    pub fn commit(&mut self, changes: Changeset) -> Result<&CommitEvent> {
        let len = self.len();
        if changes.clear && !(changes.overwrites.is_empty() && changes.removals.is_empty()) {
            return Err(Error::InvalidValue(
                "a clearing changeset cannot also address existing ordinals".into(),
            ));
        }
        for &(ordinal, ref record) in &changes.overwrites {
            self.read(ordinal)?;
            self.schema
                .check(record)
                .map_err(|(field, detail)| Error::SchemaMismatch { ordinal, field, detail })?;
        }
        let removals: BTreeSet<usize> = changes.removals.iter().copied().collect();
        for &ordinal in &removals {
            self.read(ordinal)?;
        }
        let surviving = if changes.clear { 0 } else { len - removals.len() };
        validate_records(&self.schema, &changes.appends, surviving)?;

        let mut event = CommitEvent {
            appended: changes.appends.len(),
            overwritten: changes.overwrites.len(),
            removed: removals.len(),
            ..Default::default()
        };
        if changes.clear {
            event.cleared = len;
            self.records.clear();
        }
        for (ordinal, record) in changes.overwrites {
            let slot = &mut self.records[ordinal - 1];
            for (pos, (old, new)) in slot.values().iter().zip(record.values()).enumerate() {
                if old != new {
                    event.fields_rewritten.insert(pos);
                }
            }
            *slot = record;
        }
        if !removals.is_empty() {
            let mut ordinal = 0;
            self.records.retain(|_| {
                ordinal += 1;
                !removals.contains(&ordinal)
            });
        }
        self.records.extend(changes.appends);
        self.commits.push(event);
        Ok(self.commits.last().expect("just pushed"))
    }
}

pub(crate) fn validate_records(schema: &Schema, records: &[Record], base_len: usize) -> Result<()> {
    for (i, record) in records.iter().enumerate() {
        schema.check(record).map_err(|(field, detail)| Error::SchemaMismatch {
            ordinal: base_len + i + 1,
            field,
            detail,
        })?;
    }
    Ok(())
}
