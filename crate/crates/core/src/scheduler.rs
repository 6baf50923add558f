//! Simulated-clock job runner. Jobs bind a cron schedule to a sync between
//! two tables; time only moves when the caller says so.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cron::CronSchedule;
use crate::error::{Error, Result};
use crate::storage::{load_table, save_table};
use crate::sync::{sync_with, SyncOptions, SyncReport, SyncTechnique};
use crate::table::Table;
use crate::value::{format_timestamp, Timestamp};

/// Names of the two tables a job syncs, plus the technique.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncAction {
    pub source: String,
    pub dest: String,
    pub technique: SyncTechnique,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Job {
    pub name: String,
    pub schedule: CronSchedule,
    pub action: SyncAction,
}

/// Half-open `[start, end)` interval during which scheduled fires are lost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutageWindow {
    start: Timestamp,
    end: Timestamp,
}

impl OutageWindow {
    pub fn new(start: Timestamp, end: Timestamp) -> Result<Self> {
        if start >= end {
            return Err(Error::InvalidValue(format!(
                "outage start {} is not before its end {}",
                format_timestamp(start),
                format_timestamp(end)
            )));
        }
        Ok(OutageWindow { start, end })
    }

    pub fn start(&self) -> Timestamp {
        self.start
    }

    pub fn end(&self) -> Timestamp {
        self.end
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t < self.end
    }
}

/// Inclusive simulated time range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Clock {
    pub from: Timestamp,
    pub to: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Outcome {
    Ran { report: SyncReport },
    Skipped,
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LogEntry {
    pub job: String,
    #[serde(serialize_with = "ser_ts")]
    pub instant: Timestamp,
    #[serde(flatten)]
    pub outcome: Outcome,
}

fn ser_ts<S: serde::Serializer>(t: &Timestamp, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_timestamp(*t))
}

impl std::fmt::Display for LogEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {} ", format_timestamp(self.instant), self.job)?;
        match &self.outcome {
            Outcome::Ran { report } => write!(f, "ran {report}"),
            Outcome::Skipped => f.write_str("skipped (outage)"),
            Outcome::Failed { error } => write!(f, "failed {error}"),
        }
    }
}

fn check_unique(jobs: &[Job]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for job in jobs {
        if !seen.insert(job.name.as_str()) {
            return Err(Error::DuplicateJob(job.name.clone()));
        }
    }
    Ok(())
}

/// Every fire instant of every job inside `clock`, ordered by instant and
/// then job name.
pub fn fire_plan(jobs: &[Job], clock: Clock) -> Result<Vec<(Timestamp, usize)>> {
    check_unique(jobs)?;
    let mut plan = Vec::new();
    for (i, job) in jobs.iter().enumerate() {
        let mut t = clock.from - chrono::Duration::minutes(1);
        loop {
            t = match job.schedule.next_fire(t) {
                Ok(next) => next,
                Err(Error::NoFireWithinHorizon { .. }) => break,
                Err(e) => return Err(e),
            };
            if t > clock.to {
                break;
            }
            plan.push((t, i));
        }
    }
    plan.sort_by(|a, b| (a.0, &jobs[a.1].name).cmp(&(b.0, &jobs[b.1].name)));
    Ok(plan)
}

/// Runs `jobs` over `clock` against the in-memory `tables`. Each fire
/// syncs with `as_of` set to the fire instant. Fires inside an outage are
/// logged as skipped; sync errors are logged and do not stop other jobs.
pub fn run_jobs(
    jobs: &[Job],
    clock: Clock,
    outages: &[OutageWindow],
    tables: &mut BTreeMap<String, Table>,
) -> Result<Vec<LogEntry>> {
    let plan = fire_plan(jobs, clock)?;
    let mut log = Vec::with_capacity(plan.len());
    for (instant, i) in plan {
        let job = &jobs[i];
        let outcome = if outages.iter().any(|o| o.contains(instant)) {
            Outcome::Skipped
        } else {
            match run_action(&job.action, instant, tables) {
                Ok(report) => Outcome::Ran { report },
                Err(e) => Outcome::Failed {
                    error: format!("{}: {e}", e.name()),
                },
            }
        };
        log.push(LogEntry {
            job: job.name.clone(),
            instant,
            outcome,
        });
    }
    Ok(log)
}

fn run_action(action: &SyncAction, at: Timestamp, tables: &mut BTreeMap<String, Table>) -> Result<SyncReport> {
    if !tables.contains_key(&action.source) {
        return Err(Error::MissingTable(action.source.clone()));
    }
    let mut dest = tables
        .remove(&action.dest)
        .ok_or_else(|| Error::MissingTable(action.dest.clone()))?;
    let opts = SyncOptions {
        as_of: Some(at),
        watermark: None,
    };
    let outcome = sync_with(&tables[&action.source], &mut dest, &action.technique, opts);
    tables.insert(action.dest.clone(), dest);
    outcome
}

#[derive(Deserialize)]
struct JobDoc {
    name: String,
    cron: String,
    source: String,
    dest: String,
    technique: SyncTechnique,
}

#[derive(Deserialize)]
struct JobsDoc {
    jobs: Vec<JobDoc>,
}

/// Parses a jobs document: `{"jobs": [{"name", "cron", "source", "dest",
/// "technique"}]}`. `source` and `dest` are table paths.
pub fn parse_jobs(text: &str) -> Result<Vec<Job>> {
    let doc: JobsDoc = serde_json::from_str(text)?;
    let jobs = doc
        .jobs
        .into_iter()
        .map(|j| {
            Ok(Job {
                schedule: j.cron.parse()?,
                name: j.name,
                action: SyncAction {
                    source: j.source,
                    dest: j.dest,
                    technique: j.technique,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    check_unique(&jobs)?;
    Ok(jobs)
}

/// File form of [`run_jobs`]: table names in the jobs file are paths
/// relative to `base`. Every referenced table is loaded up front and the
/// destinations are saved after the run.
pub fn run_jobs_files(jobs_path: &Path, clock: Clock, outages: &[OutageWindow]) -> Result<Vec<LogEntry>> {
    let text = fs::read_to_string(jobs_path).map_err(|e| Error::io(jobs_path, e))?;
    let jobs = parse_jobs(&text).map_err(|e| match e {
        Error::Json(j) => Error::Format {
            path: jobs_path.to_owned(),
            line: j.line(),
            detail: j.to_string(),
        },
        other => other,
    })?;
    let base = jobs_path.parent().unwrap_or(Path::new("."));
    let mut paths: BTreeMap<String, PathBuf> = BTreeMap::new();
    for job in &jobs {
        for name in [&job.action.source, &job.action.dest] {
            paths.entry(name.clone()).or_insert_with(|| base.join(name));
        }
    }
    let mut tables = BTreeMap::new();
    for (name, path) in &paths {
        tables.insert(name.clone(), load_table(path)?);
    }
    let log = run_jobs(&jobs, clock, outages, &mut tables)?;
    let dests: BTreeSet<&String> = jobs.iter().map(|j| &j.action.dest).collect();
    for name in dests {
        save_table(&tables[name], &paths[name])?;
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::ymd_hms;

    #[test]
    fn plan_orders_by_instant_then_name() {
        let mk = |name: &str, cron: &str| Job {
            name: name.into(),
            schedule: cron.parse().unwrap(),
            action: SyncAction {
                source: "s".into(),
                dest: "d".into(),
                technique: SyncTechnique::Entirety,
            },
        };
        let jobs = [mk("b", "0 * * * *"), mk("a", "0 0 * * *")];
        let clock = Clock {
            from: ymd_hms(2018, 8, 1, 0, 0, 0),
            to: ymd_hms(2018, 8, 1, 2, 0, 0),
        };
        let plan: Vec<(Timestamp, &str)> = fire_plan(&jobs, clock)
            .unwrap()
            .into_iter()
            .map(|(t, i)| (t, jobs[i].name.as_str()))
            .collect();
        assert_eq!(
            plan,
            [
                (ymd_hms(2018, 8, 1, 0, 0, 0), "a"),
                (ymd_hms(2018, 8, 1, 0, 0, 0), "b"),
                (ymd_hms(2018, 8, 1, 1, 0, 0), "b"),
                (ymd_hms(2018, 8, 1, 2, 0, 0), "b"),
            ]
        );
        assert!(matches!(
            fire_plan(&[mk("a", "* * * * *"), mk("a", "* * * * *")], clock),
            Err(Error::DuplicateJob(_))
        ));
        assert!(run_jobs(&[], clock, &[], &mut BTreeMap::new()).unwrap().is_empty());
    }

    #[test]
    fn missing_tables_are_logged_not_fatal() {
        let jobs =
            parse_jobs(r#"{"jobs":[{"name":"j","cron":"0 0 * * *","source":"s","dest":"d","technique":"entirety"}]}"#)
                .unwrap();
        let clock = Clock {
            from: ymd_hms(2018, 8, 1, 0, 0, 0),
            to: ymd_hms(2018, 8, 2, 0, 0, 0),
        };
        let log = run_jobs(&jobs, clock, &[], &mut BTreeMap::new()).unwrap();
        assert_eq!(log.len(), 2);
        assert!(log
            .iter()
            .all(|e| matches!(&e.outcome, Outcome::Failed { error } if error.starts_with("MissingTable"))));
    }

    #[test]
    fn outage_window_is_half_open() {
        let w = OutageWindow::new(ymd_hms(2018, 8, 1, 0, 0, 0), ymd_hms(2018, 8, 2, 0, 0, 0)).unwrap();
        assert!(w.contains(ymd_hms(2018, 8, 1, 0, 0, 0)));
        assert!(!w.contains(ymd_hms(2018, 8, 2, 0, 0, 0)));
        assert!(OutageWindow::new(w.end(), w.start()).is_err());
    }
}
