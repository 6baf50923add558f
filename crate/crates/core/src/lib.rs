pub mod bench;
pub mod cron;
pub mod csv;
pub mod error;
pub mod fixtures;
pub mod retrieval;
pub mod scheduler;
pub mod schema;
pub mod storage;
pub mod sync;
pub mod table;
pub mod temporal;
pub mod value;
pub mod write;

pub use error::{Error, ErrorClass, Result};
pub use schema::{Designations, Field, Schema};
pub use table::{Changeset, CommitEvent, Record, Table};
pub use value::{Date, FieldType, FieldValue, Timestamp};
