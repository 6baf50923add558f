use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use grainstore::bench::{self, Dataset, GenSpec, ReportFormat};
use grainstore::cron::CronSchedule;
use grainstore::retrieval::{
    build_entity_index, build_grain_index, exhaustive_entity_search, lookup_date_range_gls, lookup_entity, row_explode,
    scan_date_range, GrainSpec, QueryResult,
};
use grainstore::scheduler::{run_jobs_files, Clock, OutageWindow};
use grainstore::storage::{
    encode_records, load_schema, load_table_with_warnings, read_records, save_table, LoadWarning,
};
use grainstore::sync::{run_pipeline_files, sync_with, ExternalWatermark, SyncOptions, SyncTechnique, Topology};
use grainstore::temporal::{delete_by_key, history_of, update_by_key, Changes, Mode, Via};
use grainstore::value::{format_timestamp, parse_date, parse_timestamp, Date, Timestamp};
use grainstore::write::{insert, InsertStrategy};
use grainstore::{fixtures, Error, ErrorClass, FieldValue, Table};

#[derive(Parser)]
#[command(
    name = "grainstore",
    version,
    about = "CSV table store with indexed retrieval, periodic records and warehouse sync"
)]
struct Cli {
    /// Directory that bare table names resolve against.
    #[arg(long, global = true, env = "GRAINSTORE_DATA_DIR", default_value = ".")]
    data_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a table from a schema file or a built-in fixture.
    Init(InitArgs),
    /// Append records from a headed CSV file.
    Ingest(IngestArgs),
    /// Retrieve records by date range or entity key.
    #[command(subcommand)]
    Query(QueryCommand),
    /// Build and print an index.
    #[command(subcommand)]
    Index(IndexCommand),
    /// Update every record of an entity.
    Update(UpdateArgs),
    /// Delete an entity.
    Delete(DeleteArgs),
    /// Print an entity's records in order.
    History(HistoryArgs),
    /// Sync a destination table from a source table, or run a topology.
    Sync(SyncArgs),
    /// Cron evaluation and simulated job runs.
    #[command(subcommand)]
    Schedule(ScheduleCommand),
    /// Compare approaches on generated data.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Args)]
struct TableArg {
    /// Table name (resolved to `<data-dir>/<name>.csv`) or a path to a CSV file.
    #[arg(long)]
    table: String,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("origin").required(true))]
struct InitArgs {
    #[command(flatten)]
    table: TableArg,
    /// JSON schema document.
    #[arg(long, group = "origin")]
    schema: Option<PathBuf>,
    /// Built-in fixture name.
    #[arg(long, group = "origin", value_parser = clap::builder::PossibleValuesParser::new(fixtures::NAMES))]
    fixture: Option<String>,
    /// Overwrite an existing table.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    table: TableArg,
    /// Headed CSV file with the table's columns.
    #[arg(long)]
    from: PathBuf,
    #[arg(long, default_value = "bulk")]
    strategy: InsertStrategy,
}

#[derive(Subcommand)]
enum QueryCommand {
    /// Records whose date falls in [start, end].
    Range {
        #[command(flatten)]
        table: TableArg,
        #[arg(long, value_parser = date_arg)]
        start: Date,
        #[arg(long, value_parser = date_arg)]
        end: Date,
        /// `scan` or `gls:<quartermonth|month|day>`.
        #[arg(long, default_value = "scan", value_parser = range_via)]
        via: RangeVia,
    },
    /// Records whose key column equals `key`.
    Entity {
        #[command(flatten)]
        table: TableArg,
        #[arg(long)]
        key: String,
        /// `exhaustive` (alias `scan`) or `indexed` (alias `index`).
        #[arg(long, default_value = "exhaustive", value_parser = ["exhaustive", "scan", "indexed", "index"])]
        via: String,
    },
}

#[derive(Clone, Copy)]
enum RangeVia {
    Scan,
    Gls(GrainSpec),
}

#[derive(Subcommand)]
enum IndexCommand {
    /// Print a grain lookup table (`--kind grain:<g>`) or entity lookup table (`--kind entity`).
    Build {
        #[command(flatten)]
        table: TableArg,
        #[arg(long)]
        kind: String,
        /// Print one row per ordinal for this key instead of the whole table.
        #[arg(long)]
        explode: Option<String>,
    },
}

#[derive(Args)]
struct KeyedArgs {
    #[command(flatten)]
    table: TableArg,
    #[arg(long)]
    key: String,
    #[arg(long, default_value = "transient", value_parser = ["transient", "periodic"])]
    mode: String,
    #[arg(long, default_value = "exhaustive", value_parser = ["exhaustive", "indexed"])]
    via: String,
    /// Change time for periodic mode.
    #[arg(long, value_parser = ts_arg)]
    at: Option<Timestamp>,
}

#[derive(Args)]
struct UpdateArgs {
    #[command(flatten)]
    keyed: KeyedArgs,
    /// `field=value`; an empty value sets NULL.
    #[arg(long = "set", value_name = "FIELD=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct DeleteArgs {
    #[command(flatten)]
    keyed: KeyedArgs,
}

#[derive(Args)]
struct HistoryArgs {
    #[command(flatten)]
    table: TableArg,
    #[arg(long)]
    key: String,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("mode").required(true).args(["technique", "topology"]))]
struct SyncArgs {
    #[arg(long, requires_all = ["technique", "dest"])]
    source: Option<String>,
    #[arg(long, requires = "source")]
    dest: Option<String>,
    /// entirety | match:<key> | lsp:<tscol> | olsp:<tscol>:<days>
    #[arg(long, requires = "source")]
    technique: Option<SyncTechnique>,
    /// JSON topology; paths inside are relative to the file.
    #[arg(long, conflicts_with_all = ["source", "dest", "technique", "watermark_file"])]
    topology: Option<PathBuf>,
    /// Run instant; later source records are ignored.
    #[arg(long, value_parser = ts_arg)]
    as_of: Option<Timestamp>,
    /// Read the watermark from this file instead of the destination, and
    /// record the new watermark there afterwards.
    #[arg(long)]
    watermark_file: Option<PathBuf>,
    /// Write the report(s) as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ScheduleCommand {
    /// Run jobs over a simulated clock.
    Run {
        #[arg(long)]
        jobs: PathBuf,
        #[arg(long, value_parser = ts_arg)]
        from: Timestamp,
        #[arg(long, value_parser = ts_arg)]
        to: Timestamp,
        /// `START..END`, half-open; repeatable.
        #[arg(long = "outage", value_parser = outage_arg)]
        outages: Vec<OutageWindow>,
        /// Write the execution log as JSON.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Print the next fire instant(s) after a time.
    Next {
        #[arg(long)]
        cron: String,
        #[arg(long, value_parser = ts_arg)]
        after: Timestamp,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, default_value = "markdown")]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include wall times (not byte-deterministic).
    #[arg(long)]
    timings: bool,
}

#[derive(Subcommand)]
enum BenchCommand {
    Insert {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "successive,bulk,partitioned:100,parallel:4:bulk"
        )]
        strategies: Vec<InsertStrategy>,
        #[command(flatten)]
        report: ReportArgs,
    },
    Retrieval {
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        queries: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `generated` or `customers` (the 536-record customer fixture; ignores --n).
        #[arg(long, default_value = "generated", value_parser = ["generated", "customers"])]
        dataset: String,
        #[command(flatten)]
        report: ReportArgs,
    },
}

fn date_arg(s: &str) -> Result<Date, String> {
    parse_date(s).map_err(|e| e.to_string())
}

fn ts_arg(s: &str) -> Result<Timestamp, String> {
    parse_timestamp(s).map(|(t, _)| t).map_err(|e| e.to_string())
}

fn outage_arg(s: &str) -> Result<OutageWindow, String> {
    let (a, b) = s.split_once("..").ok_or("expected START..END")?;
    OutageWindow::new(ts_arg(a)?, ts_arg(b)?).map_err(|e| e.to_string())
}

fn range_via(s: &str) -> Result<RangeVia, String> {
    match s {
        "scan" => Ok(RangeVia::Scan),
        _ => match s.strip_prefix("gls:") {
            Some(g) => g.parse().map(RangeVia::Gls).map_err(|e: Error| e.to_string()),
            None => Err("expected scan or gls:<grain>".into()),
        },
    }
}

struct Ctx {
    data_dir: PathBuf,
}

impl Ctx {
    fn path(&self, table: &str) -> PathBuf {
        let looks_like_path = table.ends_with(".csv") || table.contains('/') || table.contains('\\');
        if looks_like_path {
            PathBuf::from(table)
        } else {
            self.data_dir.join(format!("{table}.csv"))
        }
    }

    fn load(&self, table: &str) -> grainstore::Result<(Table, PathBuf)> {
        let path = self.path(table);
        let loaded = load_table_with_warnings(&path)?;
        warn_all(&loaded.warnings);
        Ok((loaded.table, path))
    }
}

fn warn_all(warnings: &[LoadWarning]) {
    for w in warnings {
        eprintln!("warning: line {} field `{}`: {}", w.line, w.field, w.message);
    }
}

fn write_out(path: Option<&Path>, text: &str) -> grainstore::Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_owned(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_hits(table: &Table, result: &QueryResult) {
    print!("{}", encode_records(table.schema(), result.hits.iter().map(|(_, r)| r)));
    let ordinals: Vec<String> = result.ordinals().iter().map(ToString::to_string).collect();
    println!("ordinals: {}", ordinals.join(","));
    println!("stats: {}", result.stats);
}

fn key_value(table: &Table, raw: &str) -> grainstore::Result<FieldValue> {
    let pos = table.schema().key_position().ok_or(Error::NoKeyColumn)?;
    Ok(FieldValue::parse(raw, table.schema().fields()[pos].kind)?.value)
}

fn mode_of(s: &str) -> Mode {
    if s == "periodic" {
        Mode::Periodic
    } else {
        Mode::Transient
    }
}

fn run(cli: Cli) -> grainstore::Result<()> {
    let ctx = Ctx { data_dir: cli.data_dir };
    match cli.command {
        Command::Init(a) => {
            let path = ctx.path(&a.table.table);
            if path.exists() && !a.force {
                return Err(Error::Io {
                    source: io::Error::new(io::ErrorKind::AlreadyExists, "table exists (use --force to overwrite)"),
                    path,
                });
            }
            let table = match (a.schema, a.fixture) {
                (Some(schema), _) => Table::new(load_schema(&schema)?),
                (None, Some(name)) => fixtures::by_name(&name)?,
                (None, None) => unreachable!("clap requires one origin"),
            };
            save_table(&table, &path)?;
            println!("created {} ({} records)", path.display(), table.len());
        }
        Command::Ingest(a) => {
            let (mut table, path) = ctx.load(&a.table.table)?;
            let (records, warnings) = read_records(&a.from, table.schema())?;
            warn_all(&warnings);
            let outcome = insert(&mut table, records, a.strategy)?;
            save_table(&table, &path)?;
            println!(
                "records_added={} commits={} strategy={}",
                outcome.records_added, outcome.commits, a.strategy
            );
        }
        Command::Query(QueryCommand::Range { table, start, end, via }) => {
            let (table, _) = ctx.load(&table.table)?;
            let result = match via {
                RangeVia::Scan => scan_date_range(&table, start, end)?,
                RangeVia::Gls(grain) => {
                    let index = build_grain_index(&table, grain)?;
                    lookup_date_range_gls(&table, &index, start, end)?
                }
            };
            print_hits(&table, &result);
        }
        Command::Query(QueryCommand::Entity { table, key, via }) => {
            let (table, _) = ctx.load(&table.table)?;
            let key = key_value(&table, &key)?;
            let result = if via.starts_with("index") {
                lookup_entity(&table, &build_entity_index(&table)?, &key)?
            } else {
                exhaustive_entity_search(&table, &key)?
            };
            print_hits(&table, &result);
        }
        Command::Index(IndexCommand::Build { table, kind, explode }) => {
            let (table, _) = ctx.load(&table.table)?;
            if kind == "entity" {
                let index = build_entity_index(&table)?;
                match explode {
                    Some(raw) => {
                        let key = key_value(&table, &raw)?;
                        for (k, o) in row_explode(&key, index.ordinals(&key))? {
                            println!("{k}\t{o}");
                        }
                    }
                    None => {
                        for (k, ordinals) in index.entries() {
                            let list: Vec<String> = ordinals.iter().map(ToString::to_string).collect();
                            println!("{k}\t{}", list.join(", "));
                        }
                    }
                }
            } else if let Some(grain) = kind.strip_prefix("grain:") {
                if explode.is_some() {
                    return Err(Error::InvalidValue("--explode applies to entity indexes".into()));
                }
                let index = build_grain_index(&table, grain.parse()?)?;
                for (code, ordinal) in index.pairs() {
                    println!("{code}\t{ordinal}");
                }
            } else {
                return Err(Error::InvalidValue(format!(
                    "unknown index kind `{kind}` (expected entity or grain:<grain>)"
                )));
            }
        }
        Command::Update(a) => {
            let k = a.keyed;
            let (mut table, path) = ctx.load(&k.table.table)?;
            let mut changes = Changes::new();
            for item in &a.set {
                let (field, raw) = item
                    .split_once('=')
                    .ok_or_else(|| Error::InvalidValue(format!("`{item}` is not FIELD=VALUE")))?;
                let pos = table.schema().require(field)?;
                let value = if raw.is_empty() {
                    FieldValue::Null
                } else {
                    FieldValue::parse(raw, table.schema().fields()[pos].kind)?.value
                };
                changes.insert(field.to_owned(), value);
            }
            let key = key_value(&table, &k.key)?;
            let index;
            let via = if k.via == "indexed" {
                index = build_entity_index(&table)?;
                Via::Indexed(&index)
            } else {
                Via::Exhaustive
            };
            let n = update_by_key(&mut table, &key, &changes, mode_of(&k.mode), via, k.at)?;
            save_table(&table, &path)?;
            println!("records_written={n}");
        }
        Command::Delete(a) => {
            let k = a.keyed;
            let (mut table, path) = ctx.load(&k.table.table)?;
            let key = key_value(&table, &k.key)?;
            let index;
            let via = if k.via == "indexed" {
                index = build_entity_index(&table)?;
                Via::Indexed(&index)
            } else {
                Via::Exhaustive
            };
            let n = delete_by_key(&mut table, &key, mode_of(&k.mode), via, k.at)?;
            save_table(&table, &path)?;
            println!("records_affected={n}");
        }
        Command::History(a) => {
            let (table, _) = ctx.load(&a.table.table)?;
            let key = key_value(&table, &a.key)?;
            let rows = history_of(&table, &key)?;
            print!("{}", encode_records(table.schema(), rows.iter().map(|(_, r)| *r)));
            let ordinals: Vec<String> = rows.iter().map(|(o, _)| o.to_string()).collect();
            println!("ordinals: {}", ordinals.join(","));
        }
        Command::Sync(a) => sync_command(&ctx, a)?,
        Command::Schedule(ScheduleCommand::Run {
            jobs,
            from,
            to,
            outages,
            log,
        }) => {
            let entries = run_jobs_files(&jobs, Clock { from, to }, &outages)?;
            for e in &entries {
                println!("{e}");
            }
            if let Some(path) = log {
                write_out(Some(&path), &(serde_json::to_string_pretty(&entries)? + "\n"))?;
            }
        }
        Command::Schedule(ScheduleCommand::Next { cron, after, count }) => {
            let schedule: CronSchedule = cron.parse()?;
            let mut t = after;
            for _ in 0..count {
                t = schedule.next_fire(t)?;
                println!("{}", format_timestamp(t));
            }
        }
        Command::Bench(BenchCommand::Insert {
            n,
            seed,
            strategies,
            report,
        }) => {
            let r = bench::bench_insert(n, &strategies, seed)?;
            write_out(
                report.out.as_deref(),
                &bench::emit_report(&r, report.format, report.timings),
            )?;
        }
        Command::Bench(BenchCommand::Retrieval {
            n,
            queries,
            seed,
            dataset,
            report,
        }) => {
            let dataset = if dataset == "customers" {
                Dataset::Customers
            } else {
                Dataset::Generated(GenSpec::new(n, seed))
            };
            let r = bench::bench_retrieval(dataset, queries, seed)?;
            write_out(
                report.out.as_deref(),
                &bench::emit_report(&r, report.format, report.timings),
            )?;
        }
    }
    Ok(())
}

fn sync_command(ctx: &Ctx, a: SyncArgs) -> grainstore::Result<()> {
    let reports = if let Some(topology) = &a.topology {
        let base = topology.parent().unwrap_or(Path::new("."));
        run_pipeline_files(&Topology::load(topology)?, base, a.as_of)?
    } else {
        let (source, technique) = (a.source.expect("clap"), a.technique.expect("clap"));
        let (source, _) = ctx.load(&source)?;
        let (mut dest, dest_path) = ctx.load(&a.dest.expect("clap"))?;
        let watermark = a.watermark_file.as_deref().map(ExternalWatermark::load).transpose()?;
        let opts = SyncOptions {
            as_of: a.as_of,
            watermark,
        };
        let report = sync_with(&source, &mut dest, &technique, opts)?;
        save_table(&dest, &dest_path)?;
        if let (Some(path), SyncTechnique::Lsp { ts } | SyncTechnique::Olsp { ts, .. }) =
            (&a.watermark_file, &technique)
        {
            ExternalWatermark::store(path, grainstore::sync::watermark_of(&dest, ts)?)?;
        }
        vec![report]
    };
    for r in &reports {
        println!("{r}");
    }
    if let Some(path) = &a.report {
        let json = if a.topology.is_some() {
            serde_json::to_string_pretty(&reports)?
        } else {
            serde_json::to_string_pretty(&reports[0])?
        };
        write_out(Some(path), &(json + "\n"))?;
    }
    Ok(())
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Data => 2,
        ErrorClass::Precondition => 3,
        ErrorClass::Io => 4,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => {
            let _ = io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(exit_code(e.class()))
        }
    }
}
