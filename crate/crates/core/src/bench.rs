//! Side-by-side runs of the insert strategies and of scan versus indexed
//! retrieval over one seeded dataset. Counters are exact; wall times are
//! measured but only rendered on request.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::distributions::Alphanumeric;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fixtures;
use crate::retrieval::{
    build_entity_index, build_grain_index, exhaustive_entity_search, lookup_date_range_gls, lookup_entity,
    scan_date_range, GrainSpec, QueryResult,
};
use crate::storage::encode_table;
use crate::table::{Record, Table};
use crate::value::{ymd, Date, FieldValue};
use crate::write::{insert, InsertStrategy};

/// Shape of a generated customer-style table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenSpec {
    pub n: usize,
    /// Average records sharing one date.
    pub records_per_day: usize,
    /// Number of distinct customer IDs.
    pub keys: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(n: usize, seed: u64) -> Self {
        GenSpec {
            n,
            records_per_day: 20,
            keys: (n / 4).max(1),
            seed,
        }
    }
}

const GEN_START: (i32, u32, u32) = (2018, 1, 1);

/// Date-sorted records in the customer fixture's schema. Dates start on
/// 2018-01-01 and advance by one day with probability `1/records_per_day`
/// after each record.
pub fn generate_records(spec: GenSpec) -> Vec<Record> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let keys: Vec<String> = (0..spec.keys.max(1))
        .map(|_| (&mut rng).sample_iter(Alphanumeric).take(10).map(char::from).collect())
        .collect();
    let mut day = ymd(GEN_START.0, GEN_START.1, GEN_START.2);
    let per_day = spec.records_per_day.max(1) as f64;
    (1..=spec.n)
        .map(|tn| {
            if tn > 1 && rng.gen_bool(1.0 / per_day) {
                day = day.succ_opt().expect("date in range");
            }
            let key = &keys[rng.gen_range(0..keys.len())];
            let plan = ["AMZ20", "AMZ30", "AMZ40"][rng.gen_range(0..3)];
            Record::new(vec![
                (tn as i64).into(),
                key.as_str().into(),
                format!("Customer {key}").into(),
                plan.into(),
                day.into(),
            ])
        })
        .collect()
}

pub fn generate_table(spec: GenSpec) -> Table {
    let mut t = Table::new(fixtures::customer_schema());
    t.append_committed(generate_records(spec))
        .expect("generated rows fit the schema");
    t
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRow {
    pub approach: String,
    /// Queries answered (retrieval) or records inserted (insert).
    pub operations: usize,
    /// Commits (insert) or total records touched (retrieval).
    pub measure: u64,
    /// Largest per-query touch count; equals `measure` for insert rows.
    pub max_measure: u64,
    pub results: usize,
    pub wall: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchReport {
    pub scenario: String,
    pub seed: u64,
    pub records: usize,
    /// Name of the `measure` column.
    pub metric: &'static str,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn row(&self, approach: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.approach == approach)
    }
}

/// Inserts the same `n` generated records into an empty table with every
/// strategy, then checks the resulting tables are byte-identical.
pub fn bench_insert(n: usize, strategies: &[InsertStrategy], seed: u64) -> Result<BenchReport> {
    if n == 0 {
        return Err(Error::InvalidValue("bench insert needs at least one record".into()));
    }
    let records = generate_records(GenSpec::new(n, seed));
    let mut rows = Vec::new();
    let mut reference: Option<(String, String)> = None;
    for strategy in strategies {
        let mut table = Table::new(fixtures::customer_schema());
        let batch = records.clone();
        let started = Instant::now();
        let outcome = insert(&mut table, batch, *strategy)?;
        let wall = started.elapsed();
        let bytes = encode_table(&table);
        match &reference {
            None => reference = Some((strategy.to_string(), bytes)),
            Some((first, expected)) if *expected != bytes => {
                return Err(Error::Disagreement(format!(
                    "{strategy} and {first} produced different tables"
                )));
            }
            Some(_) => {}
        }
        rows.push(BenchRow {
            approach: strategy.to_string(),
            operations: outcome.records_added,
            measure: outcome.commits,
            max_measure: outcome.commits,
            results: table.len(),
            wall,
        });
    }
    Ok(BenchReport {
        scenario: "insert".into(),
        seed,
        records: n,
        metric: "commits",
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dataset {
    Generated(GenSpec),
    /// The 536-record customer fixture. Its first date query is always
    /// August 1–2, 2018.
    Customers,
}

fn span(t: &Table) -> (Date, Date) {
    let pos = t.schema().date_position().expect("bench tables have a date column");
    let first = t.records().first().and_then(|r| r.get(pos).as_date());
    let last = t.records().last().and_then(|r| r.get(pos).as_date());
    let start = ymd(GEN_START.0, GEN_START.1, GEN_START.2);
    (first.unwrap_or(start), last.unwrap_or(start))
}

#[derive(Default)]
struct Tally {
    operations: usize,
    touched: u64,
    max_touched: u64,
    results: usize,
    wall: Duration,
}

impl Tally {
    fn add(&mut self, r: &QueryResult, wall: Duration) {
        let touched = r.stats.records_touched as u64;
        self.operations += 1;
        self.touched += touched;
        self.max_touched = self.max_touched.max(touched);
        self.results += r.stats.results_returned;
        self.wall += wall;
    }

    fn row(self, approach: &str) -> BenchRow {
        BenchRow {
            approach: approach.into(),
            operations: self.operations,
            measure: self.touched,
            max_measure: self.max_touched,
            results: self.results,
            wall: self.wall,
        }
    }
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, Duration)> {
    let started = Instant::now();
    let out = f()?;
    Ok((out, started.elapsed()))
}

fn agree(a: &QueryResult, b: &QueryResult, what: &str) -> Result<()> {
    if a.hits != b.hits {
        return Err(Error::Disagreement(format!(
            "{what}: {} vs {} results",
            a.hits.len(),
            b.hits.len()
        )));
    }
    Ok(())
}

/// Runs `queries` date-range queries (scan and quarter-month GLS) and
/// `queries` entity queries (exhaustive and indexed) against one dataset.
/// Aborts with `Disagreement` if paired approaches return different hits.
pub fn bench_retrieval(dataset: Dataset, queries: usize, seed: u64) -> Result<BenchReport> {
    let table = match dataset {
        Dataset::Generated(spec) => generate_table(spec),
        Dataset::Customers => fixtures::customers(),
    };
    let grain = GrainSpec::QuarterMonth;
    let gls = build_grain_index(&table, grain)?;
    let entity = build_entity_index(&table)?;
    let key_pos = table.schema().key_position().expect("bench tables have a key column");
    let (first, last) = span(&table);
    let days = (last - first).num_days().max(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);

    let (mut scan, mut lookup, mut exhaustive, mut indexed) =
        (Tally::default(), Tally::default(), Tally::default(), Tally::default());
    for q in 0..queries {
        let (start, end) = if q == 0 && dataset == Dataset::Customers {
            (ymd(2018, 8, 1), ymd(2018, 8, 2))
        } else {
            let a = first + chrono::Duration::days(rng.gen_range(0..=days));
            let b = first + chrono::Duration::days(rng.gen_range(0..=days));
            (a.min(b), a.max(b))
        };
        let (s, ws) = timed(|| scan_date_range(&table, start, end))?;
        let (g, wg) = timed(|| lookup_date_range_gls(&table, &gls, start, end))?;
        agree(&s, &g, "scan and gls")?;
        scan.add(&s, ws);
        lookup.add(&g, wg);

        let key = if table.is_empty() || rng.gen_ratio(1, 10) {
            FieldValue::text("absent-key")
        } else {
            table.records()[rng.gen_range(0..table.len())].get(key_pos).clone()
        };
        let (e, we) = timed(|| exhaustive_entity_search(&table, &key))?;
        let (i, wi) = timed(|| lookup_entity(&table, &entity, &key))?;
        agree(&e, &i, "exhaustive and indexed")?;
        exhaustive.add(&e, we);
        indexed.add(&i, wi);
    }
    let rows = if queries == 0 {
        Vec::new()
    } else {
        vec![
            scan.row("scan"),
            lookup.row(&format!("gls:{grain}")),
            exhaustive.row("exhaustive"),
            indexed.row("indexed"),
        ]
    };
    Ok(BenchReport {
        scenario: match dataset {
            Dataset::Customers => "retrieval (customer fixture)".into(),
            Dataset::Generated(_) => "retrieval".into(),
        },
        seed,
        records: table.len(),
        metric: "records_touched",
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(Error::InvalidValue(format!(
                "unknown report format `{s}` (expected markdown or csv)"
            ))),
        }
    }
}

/// Renders a report. Output depends only on the report's counters unless
/// `timings` is set, which adds a wall-time column in milliseconds.
pub fn emit_report(report: &BenchReport, format: ReportFormat, timings: bool) -> String {
    let mut header = vec!["approach", "operations", report.metric, "max_per_operation", "results"];
    if timings {
        header.push("wall_ms");
    }
    let cells = |row: &BenchRow| {
        let mut c = vec![
            row.approach.clone(),
            row.operations.to_string(),
            row.measure.to_string(),
            row.max_measure.to_string(),
            row.results.to_string(),
        ];
        if timings {
            c.push(format!("{:.3}", row.wall.as_secs_f64() * 1e3));
        }
        c
    };
    let mut out = String::new();
    match format {
        ReportFormat::Markdown => {
            let _ = writeln!(
                out,
                "### {} (records={}, seed={})\n",
                report.scenario, report.records, report.seed
            );
            let _ = writeln!(out, "| {} |", header.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
            for row in &report.rows {
                let _ = writeln!(out, "| {} |", cells(row).join(" | "));
            }
        }
        ReportFormat::Csv => {
            let mut line = String::new();
            crate::csv::write_row(&mut line, header.iter().map(|h| Some(*h)));
            out.push_str(&line);
            for row in &report.rows {
                let c = cells(row);
                crate::csv::write_row(&mut out, c.iter().map(|s| Some(s.as_str())));
            }
        }
    }
    out
}
