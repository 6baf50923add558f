use std::collections::BTreeMap;

use super::{IndexStamp, QueryResult};
use crate::error::{Error, Result};
use crate::table::Table;
use crate::value::FieldValue;

/// Key value → ascending ordinals of the records carrying it. Null keys
/// are not indexed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityIndex {
    key_column: String,
    key_pos: usize,
    entries: BTreeMap<FieldValue, Vec<usize>>,
    stamp: IndexStamp,
}

fn key_position(table: &Table) -> Result<usize> {
    table.schema().key_position().ok_or(Error::NoKeyColumn)
}

/// Reads every record and keeps the ones whose key equals `key`.
pub fn exhaustive_entity_search(table: &Table, key: &FieldValue) -> Result<QueryResult> {
    let pos = key_position(table)?;
    let mut out = QueryResult::default();
    for (ordinal, record) in table.iter() {
        out.stats.records_touched += 1;
        if record.get(pos) == key {
            out.hits.push((ordinal, record.clone()));
        }
    }
    out.stats.results_returned = out.hits.len();
    Ok(out)
}

pub fn build_entity_index(table: &Table) -> Result<EntityIndex> {
    let key_pos = key_position(table)?;
    let mut index = EntityIndex {
        key_column: table.schema().fields()[key_pos].name.clone(),
        key_pos,
        entries: BTreeMap::new(),
        stamp: IndexStamp::of(table),
    };
    index.absorb(table, 1);
    Ok(index)
}

/// Reads only the records the index lists for `key`.
pub fn lookup_entity(table: &Table, index: &EntityIndex, key: &FieldValue) -> Result<QueryResult> {
    index.stamp.check(table)?;
    let mut out = QueryResult::default();
    for &ordinal in index.ordinals(key) {
        out.hits.push((ordinal, table.read(ordinal)?.clone()));
    }
    out.stats.records_touched = out.hits.len();
    out.stats.results_returned = out.hits.len();
    Ok(out)
}

impl EntityIndex {
    pub fn key_column(&self) -> &str {
        &self.key_column
    }

    pub fn entries(&self) -> &BTreeMap<FieldValue, Vec<usize>> {
        &self.entries
    }

    pub fn ordinals(&self, key: &FieldValue) -> &[usize] {
        self.entries.get(key).map_or(&[], Vec::as_slice)
    }

    pub fn stamp(&self) -> IndexStamp {
        self.stamp
    }

    /// Ordinals for `key`, provided the index is current for `table`.
    pub fn checked_ordinals(&self, table: &Table, key: &FieldValue) -> Result<&[usize]> {
        self.stamp.check(table)?;
        Ok(self.ordinals(key))
    }

    fn absorb(&mut self, table: &Table, from: usize) {
        for (ordinal, record) in table.iter().skip(from - 1) {
            let key = record.get(self.key_pos);
            if !key.is_null() {
                self.entries.entry(key.clone()).or_default().push(ordinal);
            }
        }
        self.stamp = IndexStamp::of(table);
    }

    /// Picks up records appended since the index was built. Any other
    /// change to the key column (removals, clears, key rewrites) is
    /// `StaleIndex` and calls for a rebuild.
    pub fn extend(&mut self, table: &Table) -> Result<()> {
        let from = self.stamp.appended_since(table, self.key_pos)?;
        self.absorb(table, from);
        Ok(())
    }

    /// Full consistency check against `table`.
    pub fn verify(&self, table: &Table) -> Result<()> {
        self.stamp.check(table)?;
        if build_entity_index(table)?.entries != self.entries {
            return Err(Error::Disagreement("entity index differs from a rebuild".into()));
        }
        Ok(())
    }
}
