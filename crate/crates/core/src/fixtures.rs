//! Small reference tables: a month-and-a-bit of customer transactions, an
//! indexed patient case table, the assignment submission tables and a
//! daily warehouse-sync sequence.

use chrono::Duration;
use rand::distributions::Alphanumeric;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::schema::{Designations, Field, Schema};
use crate::table::{Record, Table};
use crate::temporal::{delete_periodic, update_periodic, ActionLabel, Changes, CurrencyMarker};
use crate::value::{parse_timestamp, ymd, ymd_hms, FieldType, FieldValue, Timestamp};

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 6] = [
    "customers",
    "patients",
    "submissions-modification",
    "submissions-deletion",
    "olsp-source",
    "olsp-warehouse",
];

pub fn by_name(name: &str) -> Result<Table> {
    match name {
        "customers" => Ok(customers()),
        "patients" => Ok(patients()),
        "submissions-modification" => Ok(submissions(SubmissionVariant::Modification)),
        "submissions-deletion" => Ok(submissions(SubmissionVariant::Deletion)),
        "olsp-source" => Ok(olsp_sequence(OLSP_BASE, 3).0),
        "olsp-warehouse" => Ok(olsp_sequence(OLSP_BASE, 3).1),
        _ => Err(Error::InvalidValue(format!(
            "unknown fixture `{name}` (expected one of {})",
            NAMES.join(", ")
        ))),
    }
}

const FIRST: [&str; 12] = [
    "Alma", "Bruno", "Carla", "Dante", "Edith", "Felix", "Gina", "Hugo", "Irene", "Jonas", "Karla", "Lionel",
];
const LAST: [&str; 12] = [
    "Abad", "Bautista", "Castro", "Dizon", "Enriquez", "Flores", "Garcia", "Herrera", "Ilagan", "Jimenez", "Katigbak",
    "Lopez",
];
const PLANS: [&str; 3] = ["AMZ20", "AMZ30", "AMZ40"];

pub fn customer_schema() -> Schema {
    Schema::new(
        vec![
            Field::new("Transaction number", FieldType::Integer),
            Field::new("Customer ID", FieldType::Text),
            Field::new("Customer Name", FieldType::Text),
            Field::new("Subscription", FieldType::Text),
            Field::new("Date", FieldType::Date),
        ],
        Designations {
            key_column: Some("Customer ID".into()),
            date_column: Some("Date".into()),
            ..Default::default()
        },
    )
    .expect("valid customer schema")
}

/// 536 transactions: TN 1–534 fall in July 2018 (the 5th through the
/// 31st), TN 535 and 536 on August 1 and 2. The first two and last three
/// rows are fixed; the rest are generated from a fixed seed.
pub fn customers() -> Table {
    let fixed = |tn: i64, id: &str, name: &str, plan: &str, day| {
        Record::new(vec![tn.into(), id.into(), name.into(), plan.into(), day])
    };
    let mut rng = ChaCha8Rng::seed_from_u64(536);
    let mut records = vec![
        fixed(1, "RSoLGFtpbJ", "Anne Allgood", "AMZ20", ymd(2018, 7, 5).into()),
        fixed(2, "7FbkoTnEMh", "Barbie Banderas", "AMZ30", ymd(2018, 7, 5).into()),
    ];
    for tn in 3..=533i64 {
        let id: String = (&mut rng).sample_iter(Alphanumeric).take(10).map(char::from).collect();
        let name = format!("{} {}", FIRST[rng.gen_range(0..12)], LAST[rng.gen_range(0..12)]);
        let plan = PLANS[rng.gen_range(0..3)];
        let day = 5 + ((tn - 1) * 26 / 533) as u32;
        records.push(fixed(tn, &id, &name, plan, ymd(2018, 7, day).into()));
    }
    records.push(fixed(
        534,
        "s0E78xxKuG",
        "Catherine Calvin",
        "AMZ20",
        ymd(2018, 7, 31).into(),
    ));
    records.push(fixed(
        535,
        "IrmfSP9ZjJ",
        "Diana Delevingne",
        "AMZ20",
        ymd(2018, 8, 1).into(),
    ));
    records.push(fixed(
        536,
        "CqHVuthBnH",
        "Elise Everett",
        "AMZ40",
        ymd(2018, 8, 2).into(),
    ));
    let mut t = Table::new(customer_schema());
    t.append_committed(records).expect("fixture rows fit the schema");
    t
}

pub const PATIENT_A: &str = "28435300131710927001";
pub const PATIENT_B: &str = "56729845935643075507";

/// 18 case records. Patient A owns cases 3, 5, 6, 11 and 18, patient B
/// cases 2, 4 and 10; every other case belongs to a distinct patient.
pub fn patients() -> Table {
    let schema = Schema::new(
        vec![
            Field::new("Case number", FieldType::Integer),
            Field::new("Patient id", FieldType::Text),
        ],
        Designations {
            key_column: Some("Patient id".into()),
            ..Default::default()
        },
    )
    .expect("valid patient schema");
    let records = (1..=18i64)
        .map(|case| {
            let id = match case {
                3 | 5 | 6 | 11 | 18 => PATIENT_A.to_owned(),
                2 | 4 | 10 => PATIENT_B.to_owned(),
                other => format!("{:020}", 90_000_000_000_000_000_000u128 + other as u128 * 7_919),
            };
            Record::new(vec![case.into(), id.into()])
        })
        .collect();
    let mut t = Table::new(schema);
    t.append_committed(records).expect("fixture rows fit the schema");
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubmissionVariant {
    /// Student name, Submitted, Timestamp, Currency.
    Modification,
    /// As above with an Action column before Currency.
    Deletion,
}

pub const STUDENT: &str = "Cruz, Michael T.";

/// The single starting row: nothing submitted yet.
pub fn submissions(variant: SubmissionVariant) -> Table {
    let with_action = variant == SubmissionVariant::Deletion;
    let mut fields = vec![
        Field::new("Student name", FieldType::Text),
        Field::nullable("Submitted", FieldType::Text),
        Field::nullable("Timestamp", FieldType::Timestamp),
    ];
    if with_action {
        fields.push(Field::new("Action", FieldType::Text));
    }
    fields.push(Field::nullable("Currency", FieldType::Text));
    let schema = Schema::new(
        fields,
        Designations {
            key_column: Some("Student name".into()),
            timestamp_column: Some("Timestamp".into()),
            currency_column: Some("Currency".into()),
            action_column: with_action.then(|| "Action".into()),
            ..Default::default()
        },
    )
    .expect("valid submission schema");
    let mut row: Vec<FieldValue> = vec![STUDENT.into(), "None".into(), FieldValue::Null];
    if with_action {
        row.push(ActionLabel::NotSubmitted.into());
    }
    row.push(CurrencyMarker::Current.to_value());
    let mut t = Table::new(schema);
    t.append_committed(vec![Record::new(row)])
        .expect("fixture row fits the schema");
    t
}

fn stamp(raw: &str) -> Timestamp {
    parse_timestamp(raw).expect("fixture timestamp").0
}

/// Replays the narrated history on a fresh submission table. Modification:
/// two submissions. Deletion: submit, delete, resubmit (the resubmission
/// is stamped `08-24-18 24:05:23`, i.e. five past midnight on the 25th).
pub fn replay_submissions(variant: SubmissionVariant) -> Result<Table> {
    let mut t = submissions(variant);
    let key = FieldValue::from(STUDENT);
    let submit = |file: &str| {
        let mut c = Changes::from([("Submitted".to_owned(), file.into())]);
        if variant == SubmissionVariant::Deletion {
            c.insert("Action".into(), ActionLabel::Submitted.into());
        }
        c
    };
    match variant {
        SubmissionVariant::Modification => {
            update_periodic(&mut t, &key, &submit("file(1).txt"), stamp("08-23-18 23:58:40"))?;
            update_periodic(&mut t, &key, &submit("file(2).txt"), stamp("08-23-18 23:59:54"))?;
        }
        SubmissionVariant::Deletion => {
            update_periodic(&mut t, &key, &submit("file(1).txt"), stamp("08-23-18 23:58:40"))?;
            delete_periodic(&mut t, &key, stamp("08-23-18 23:59:54"))?;
            update_periodic(&mut t, &key, &submit("file(2).txt"), stamp("08-24-18 24:05:23"))?;
        }
    }
    Ok(t)
}

/// Number of records the warehouse holds in the default sync fixture.
pub const OLSP_BASE: usize = 20;

pub fn daily_schema() -> Schema {
    Schema::new(
        vec![
            Field::new("seq", FieldType::Integer),
            Field::new("payload", FieldType::Text),
            Field::new("ts", FieldType::Timestamp),
        ],
        Designations {
            key_column: Some("seq".into()),
            timestamp_column: Some("ts".into()),
            ..Default::default()
        },
    )
    .expect("valid daily schema")
}

/// The day-`i` record of the daily sequence (1-based), stamped at 08:00 on
/// 2018-08-01 plus `i - 1` days.
pub fn daily_record(i: usize) -> Record {
    let t = ymd_hms(2018, 8, 1, 8, 0, 0) + Duration::days(i as i64 - 1);
    Record::new(vec![(i as i64).into(), format!("d{i}").into(), t.into()])
}

/// `(source, warehouse)`: the source holds `d1..d(n+extra)`, the warehouse
/// `d1..dn`, as after `extra` missed daily syncs.
pub fn olsp_sequence(n: usize, extra: usize) -> (Table, Table) {
    let build = |len: usize| {
        let mut t = Table::new(daily_schema());
        t.append_committed((1..=len).map(daily_record).collect())
            .expect("fixture rows fit the schema");
        t
    };
    (build(n + extra), build(n))
}
