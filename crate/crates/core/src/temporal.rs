//! Transient and periodic modification/deletion.
//!
//! Transient operations overwrite or remove records in place. Periodic
//! operations never touch an existing record except to clear its currency
//! marker: each change appends a new record stamped with the change time
//! and marked `Current`, so the full history of an entity stays readable.
//!
//! A periodic-mode table designates a key column, a timestamp column and a
//! nullable text currency column; periodic deletion additionally needs an
//! action column.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::retrieval::EntityIndex;
use crate::table::{Changeset, Record, Table};
use crate::value::{format_timestamp, FieldValue, Timestamp};

pub type Changes = BTreeMap<String, FieldValue>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurrencyMarker {
    Current,
    NotCurrent,
}

impl CurrencyMarker {
    pub const CURRENT_TEXT: &'static str = "Current";

    pub fn to_value(self) -> FieldValue {
        match self {
            CurrencyMarker::Current => FieldValue::text(Self::CURRENT_TEXT),
            CurrencyMarker::NotCurrent => FieldValue::Null,
        }
    }

    pub fn of(value: &FieldValue) -> Self {
        match value.as_text() {
            Some(Self::CURRENT_TEXT) => CurrencyMarker::Current,
            _ => CurrencyMarker::NotCurrent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionLabel {
    NotSubmitted,
    Submitted,
    Deleted,
    Updated,
}

impl ActionLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ActionLabel::NotSubmitted => "Not Submitted",
            ActionLabel::Submitted => "Submitted",
            ActionLabel::Deleted => "Deleted",
            ActionLabel::Updated => "Updated",
        }
    }
}

impl fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<ActionLabel> for FieldValue {
    fn from(a: ActionLabel) -> Self {
        FieldValue::text(a.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Transient,
    Periodic,
}

/// How records matching a key are located.
#[derive(Debug, Clone, Copy)]
pub enum Via<'a> {
    /// Read the whole table.
    Exhaustive,
    /// Read only what the entity index lists. The index must be current.
    Indexed(&'a EntityIndex),
}

/// Column positions of a periodic-mode table.
struct PeriodicColumns {
    key: usize,
    ts: usize,
    currency: usize,
    action: Option<usize>,
}

impl PeriodicColumns {
    fn of(table: &Table) -> Result<Self> {
        let s = table.schema();
        Ok(PeriodicColumns {
            key: s.key_position().ok_or(Error::NoKeyColumn)?,
            ts: s.timestamp_position().ok_or(Error::MissingDesignation("timestamp"))?,
            currency: s.currency_position().ok_or(Error::MissingDesignation("currency"))?,
            action: s.action_position(),
        })
    }

    fn managed(&self, pos: usize) -> bool {
        pos == self.key || pos == self.ts || pos == self.currency
    }
}

/// Resolves field names to positions and type-checks the new values
/// against a record that would land at `ordinal`.
fn resolve(table: &Table, changes: &Changes, ordinal: usize) -> Result<Vec<(usize, FieldValue)>> {
    let schema = table.schema();
    changes
        .iter()
        .map(|(name, value)| {
            let pos = schema.require(name)?;
            schema.check_value(pos, value).map_err(|detail| Error::SchemaMismatch {
                ordinal,
                field: name.clone(),
                detail,
            })?;
            Ok((pos, value.clone()))
        })
        .collect()
}

fn apply(record: &mut Record, resolved: &[(usize, FieldValue)]) {
    for (pos, value) in resolved {
        record.set(*pos, value.clone());
    }
}

/// Ordinals of records whose key column equals `key`.
fn matching(table: &Table, key: &FieldValue, via: Via<'_>) -> Result<Vec<usize>> {
    let pos = table.schema().key_position().ok_or(Error::NoKeyColumn)?;
    match via {
        Via::Exhaustive => Ok(table
            .iter()
            .filter(|(_, r)| r.get(pos) == key)
            .map(|(o, _)| o)
            .collect()),
        Via::Indexed(index) => Ok(index.checked_ordinals(table, key)?.to_vec()),
    }
}

/// Overwrites fields of one record in place. History is lost.
pub fn update_transient(table: &mut Table, ordinal: usize, changes: &Changes) -> Result<()> {
    let mut record = table.read(ordinal)?.clone();
    apply(&mut record, &resolve(table, changes, ordinal)?);
    table.commit(Changeset::new().overwrite(ordinal, record))?;
    Ok(())
}

/// Removes one record; later ordinals shift down by one.
pub fn delete_transient(table: &mut Table, ordinal: usize) -> Result<()> {
    table.read(ordinal)?;
    table.commit(Changeset::new().remove(ordinal))?;
    Ok(())
}

/// Appends a new current version of the entity with `new_values` applied.
pub fn update_periodic(table: &mut Table, key: &FieldValue, new_values: &Changes, at: Timestamp) -> Result<()> {
    append_version(table, key, new_values, at, ActionLabel::Updated, Via::Exhaustive)
}

/// Appends a copy of the entity's current record labelled `Deleted`.
pub fn delete_periodic(table: &mut Table, key: &FieldValue, at: Timestamp) -> Result<()> {
    if table.schema().action_position().is_none() {
        return Err(Error::MissingDesignation("action"));
    }
    append_version(table, key, &Changes::new(), at, ActionLabel::Deleted, Via::Exhaustive)
}

fn append_version(
    table: &mut Table,
    key: &FieldValue,
    new_values: &Changes,
    at: Timestamp,
    default_action: ActionLabel,
    via: Via<'_>,
) -> Result<()> {
    let cols = PeriodicColumns::of(table)?;
    let ordinals = matching(table, key, via)?;
    if ordinals.is_empty() {
        return Err(Error::NoSuchEntity(key.to_string()));
    }
    let current: Vec<usize> = ordinals
        .iter()
        .copied()
        .filter(|&o| CurrencyMarker::of(table.records()[o - 1].get(cols.currency)) == CurrencyMarker::Current)
        .collect();
    let base_ordinal = current.last().copied().unwrap_or(*ordinals.last().expect("nonempty"));
    let base = &table.records()[base_ordinal - 1];
    if let Some(prev) = base.get(cols.ts).as_timestamp() {
        if at < prev {
            return Err(Error::NonMonotoneTimestamp {
                current: format_timestamp(prev),
                requested: format_timestamp(at),
            });
        }
    }

    let new_ordinal = table.len() + 1;
    let resolved = resolve(table, new_values, new_ordinal)?;
    if let Some((pos, _)) = resolved.iter().find(|(pos, _)| cols.managed(*pos)) {
        return Err(Error::InvalidValue(format!(
            "`{}` is maintained by periodic operations and cannot be set directly",
            table.schema().fields()[*pos].name
        )));
    }
    let mut record = base.clone();
    apply(&mut record, &resolved);
    record.set(cols.ts, at.into());
    record.set(cols.currency, CurrencyMarker::Current.to_value());
    if let Some(action) = cols.action {
        if !resolved.iter().any(|(pos, _)| *pos == action) {
            record.set(action, default_action.into());
        }
    }

    let mut changes = Changeset::new();
    for o in current {
        let mut demoted = table.records()[o - 1].clone();
        demoted.set(cols.currency, CurrencyMarker::NotCurrent.to_value());
        changes = changes.overwrite(o, demoted);
    }
    table.commit(changes.append(record))?;
    Ok(())
}

/// The entity's record marked `Current`, if any.
pub fn current_of<'t>(table: &'t Table, key: &FieldValue) -> Result<Option<(usize, &'t Record)>> {
    let cols = PeriodicColumns::of(table)?;
    Ok(table
        .iter()
        .rev()
        .find(|(_, r)| r.get(cols.key) == key && CurrencyMarker::of(r.get(cols.currency)) == CurrencyMarker::Current))
}

/// All of the entity's records in ordinal order.
pub fn history_of<'t>(table: &'t Table, key: &FieldValue) -> Result<Vec<(usize, &'t Record)>> {
    let pos = table.schema().key_position().ok_or(Error::NoKeyColumn)?;
    Ok(table.iter().filter(|(_, r)| r.get(pos) == key).collect())
}

/// Updates every record of an entity.
///
/// Transient mode rewrites all matches in one commit (zero matches is a
/// no-op). Periodic mode appends a new current version; `at` is then
/// required. Returns the number of records written.
pub fn update_by_key(
    table: &mut Table,
    key: &FieldValue,
    new_values: &Changes,
    mode: Mode,
    via: Via<'_>,
    at: Option<Timestamp>,
) -> Result<usize> {
    match mode {
        Mode::Transient => {
            let ordinals = matching(table, key, via)?;
            let resolved = resolve(table, new_values, ordinals.first().copied().unwrap_or(0))?;
            if ordinals.is_empty() {
                return Ok(0);
            }
            let mut changes = Changeset::new();
            for &o in &ordinals {
                let mut record = table.records()[o - 1].clone();
                apply(&mut record, &resolved);
                changes = changes.overwrite(o, record);
            }
            table.commit(changes)?;
            Ok(ordinals.len())
        }
        Mode::Periodic => {
            let at = at.ok_or_else(|| Error::InvalidValue("periodic updates need a timestamp".into()))?;
            append_version(table, key, new_values, at, ActionLabel::Updated, via)?;
            Ok(1)
        }
    }
}

/// Deletes an entity. Transient mode removes every match in one commit;
/// periodic mode appends a `Deleted` version. Returns records affected.
pub fn delete_by_key(
    table: &mut Table,
    key: &FieldValue,
    mode: Mode,
    via: Via<'_>,
    at: Option<Timestamp>,
) -> Result<usize> {
    match mode {
        Mode::Transient => {
            let ordinals = matching(table, key, via)?;
            if ordinals.is_empty() {
                return Ok(0);
            }
            let changes = ordinals.iter().rev().fold(Changeset::new(), |c, &o| c.remove(o));
            table.commit(changes)?;
            Ok(ordinals.len())
        }
        Mode::Periodic => {
            if table.schema().action_position().is_none() {
                return Err(Error::MissingDesignation("action"));
            }
            let at = at.ok_or_else(|| Error::InvalidValue("periodic deletes need a timestamp".into()))?;
            append_version(table, key, &Changes::new(), at, ActionLabel::Deleted, via)?;
            Ok(1)
        }
    }
}
