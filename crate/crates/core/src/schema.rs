use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::Record;
use crate::value::{FieldType, FieldValue};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Field {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: FieldType,
    #[serde(default)]
    pub nullable: bool,
}

impl Field {
    pub fn new(name: impl Into<String>, kind: FieldType) -> Self {
        Field {
            name: name.into(),
            kind,
            nullable: false,
        }
    }

    pub fn nullable(name: impl Into<String>, kind: FieldType) -> Self {
        Field {
            nullable: true,
            ..Field::new(name, kind)
        }
    }
}

/// Ordered field list plus the optional column designations the
/// retrieval, temporal and sync modules key off.
///
/// Constructed through [`Schema::new`] or deserialization; both validate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SchemaDoc", into = "SchemaDoc")]
pub struct Schema {
    fields: Vec<Field>,
    designations: Designations,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Designations {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date_column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub currency_column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_column: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct SchemaDoc {
    fields: Vec<Field>,
    #[serde(flatten)]
    designations: Designations,
}

impl TryFrom<SchemaDoc> for Schema {
    type Error = Error;

    fn try_from(doc: SchemaDoc) -> Result<Self> {
        Schema::new(doc.fields, doc.designations)
    }
}

impl From<Schema> for SchemaDoc {
    fn from(s: Schema) -> Self {
        SchemaDoc {
            fields: s.fields,
            designations: s.designations,
        }
    }
}

impl Schema {
    pub fn new(fields: Vec<Field>, designations: Designations) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::InvalidSchema("schema has no fields".into()));
        }
        for (i, f) in fields.iter().enumerate() {
            if f.name.is_empty() {
                return Err(Error::InvalidSchema(format!("field {} has an empty name", i + 1)));
            }
            if fields[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::InvalidSchema(format!("duplicate field `{}`", f.name)));
            }
        }
        let schema = Schema { fields, designations };
        let d = &schema.designations;
        schema.check_designation("key", d.key_column.as_deref(), |_| true, "any type")?;
        schema.check_designation(
            "date",
            d.date_column.as_deref(),
            |f| matches!(f.kind, FieldType::Date | FieldType::Timestamp) && !f.nullable,
            "non-nullable date or timestamp",
        )?;
        schema.check_designation(
            "timestamp",
            d.timestamp_column.as_deref(),
            |f| f.kind == FieldType::Timestamp,
            "timestamp",
        )?;
        schema.check_designation(
            "currency",
            d.currency_column.as_deref(),
            |f| f.kind == FieldType::Text && f.nullable,
            "nullable text",
        )?;
        schema.check_designation(
            "action",
            d.action_column.as_deref(),
            |f| f.kind == FieldType::Text,
            "text",
        )?;
        Ok(schema)
    }

    fn check_designation(
        &self,
        role: &str,
        column: Option<&str>,
        ok: impl Fn(&Field) -> bool,
        wanted: &str,
    ) -> Result<()> {
        let Some(name) = column else { return Ok(()) };
        let field = self
            .field(name)
            .ok_or_else(|| Error::InvalidSchema(format!("{role} column `{name}` is not a field")))?;
        if !ok(field) {
            return Err(Error::InvalidSchema(format!("{role} column `{name}` must be {wanted}")));
        }
        Ok(())
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn arity(&self) -> usize {
        self.fields.len()
    }

    pub fn designations(&self) -> &Designations {
        &self.designations
    }

    pub fn field(&self, name: &str) -> Option<&Field> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    /// Position of `name`, or `UnknownField`.
    pub fn require(&self, name: &str) -> Result<usize> {
        self.position(name).ok_or_else(|| Error::UnknownField(name.to_owned()))
    }

    pub fn key_position(&self) -> Option<usize> {
        self.designations.key_column.as_deref().and_then(|n| self.position(n))
    }

    pub fn date_position(&self) -> Option<usize> {
        self.designations.date_column.as_deref().and_then(|n| self.position(n))
    }

    pub fn timestamp_position(&self) -> Option<usize> {
        self.designations
            .timestamp_column
            .as_deref()
            .and_then(|n| self.position(n))
    }

    pub fn currency_position(&self) -> Option<usize> {
        self.designations
            .currency_column
            .as_deref()
            .and_then(|n| self.position(n))
    }

    pub fn action_position(&self) -> Option<usize> {
        self.designations
            .action_column
            .as_deref()
            .and_then(|n| self.position(n))
    }

    /// Checks a single value against field `pos`.
    pub fn check_value(&self, pos: usize, value: &FieldValue) -> Result<(), String> {
        let field = &self.fields[pos];
        match value.field_type() {
            None if field.nullable => Ok(()),
            None => Err("null in a non-nullable field".into()),
            Some(t) if t == field.kind => Ok(()),
            Some(t) => Err(format!("{t} value in a {} field", field.kind)),
        }
    }

    /// Returns the offending field name and reason on failure.
    pub fn check(&self, record: &Record) -> Result<(), (String, String)> {
        if record.len() != self.arity() {
            return Err((
                String::from("*"),
                format!("record has {} values, schema has {}", record.len(), self.arity()),
            ));
        }
        for (pos, value) in record.values().iter().enumerate() {
            self.check_value(pos, value)
                .map_err(|why| (self.fields[pos].name.clone(), why))?;
        }
        Ok(())
    }

    /// Same field names and types in the same order; nullability and
    /// designations may differ.
    pub fn sync_compatible(&self, other: &Schema) -> Result<()> {
        if self.arity() != other.arity() {
            return Err(Error::SchemaIncompatible(format!(
                "{} fields vs {} fields",
                self.arity(),
                other.arity()
            )));
        }
        for (a, b) in self.fields.iter().zip(&other.fields) {
            if a.name != b.name || a.kind != b.kind {
                return Err(Error::SchemaIncompatible(format!(
                    "`{}` ({}) vs `{}` ({})",
                    a.name, a.kind, b.name, b.kind
                )));
            }
        }
        Ok(())
    }

    pub fn field_names(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|f| f.name.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fields() -> Vec<Field> {
        vec![
            Field::new("id", FieldType::Integer),
            Field::new("name", FieldType::Text),
            Field::new("day", FieldType::Date),
        ]
    }

    #[test]
    fn rejects_empty_and_duplicate_names() {
        assert!(matches!(
            Schema::new(vec![], Designations::default()),
            Err(Error::InvalidSchema(_))
        ));
        let mut f = fields();
        f.push(Field::new("id", FieldType::Text));
        assert!(Schema::new(f, Designations::default()).is_err());
        let mut f = fields();
        f[1].name.clear();
        assert!(Schema::new(f, Designations::default()).is_err());
    }

    #[test]
    fn designations_must_name_compatible_fields() {
        let d = Designations {
            date_column: Some("name".into()),
            ..Default::default()
        };
        assert!(Schema::new(fields(), d).is_err());
        let d = Designations {
            key_column: Some("missing".into()),
            ..Default::default()
        };
        assert!(Schema::new(fields(), d).is_err());
        let d = Designations {
            key_column: Some("name".into()),
            date_column: Some("day".into()),
            ..Default::default()
        };
        let s = Schema::new(fields(), d).unwrap();
        assert_eq!(s.key_position(), Some(1));
        assert_eq!(s.date_position(), Some(2));
    }

    #[test]
    fn json_round_trip_validates() {
        let s = Schema::new(
            fields(),
            Designations {
                key_column: Some("id".into()),
                ..Default::default()
            },
        )
        .unwrap();
        let text = serde_json::to_string(&s).unwrap();
        let back: Schema = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
        let bad = r#"{"fields":[{"name":"a","type":"text"},{"name":"a","type":"text"}]}"#;
        assert!(serde_json::from_str::<Schema>(bad).is_err());
    }
}
