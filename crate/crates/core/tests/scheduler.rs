use std::collections::BTreeMap;
use std::fs;

use chrono::Duration;
use grainstore::fixtures::{daily_record, daily_schema};
use grainstore::scheduler::{parse_jobs, run_jobs, run_jobs_files, Clock, Job, OutageWindow, Outcome, SyncAction};
use grainstore::storage::{load_table, save_table};
use grainstore::sync::watermark_of;
use grainstore::value::ymd_hms;
use grainstore::{Error, Table, Timestamp};

fn daily(range: std::ops::RangeInclusive<usize>) -> Table {
    let mut t = Table::new(daily_schema());
    t.append_committed(range.map(daily_record).collect()).unwrap();
    t
}

fn job(name: &str, cron: &str, technique: &str) -> Job {
    Job {
        name: name.into(),
        schedule: cron.parse().unwrap(),
        action: SyncAction {
            source: "src".into(),
            dest: "wh".into(),
            technique: technique.parse().unwrap(),
        },
    }
}

fn tables(source: Table, dest: Table) -> BTreeMap<String, Table> {
    BTreeMap::from([("src".to_owned(), source), ("wh".to_owned(), dest)])
}

fn day(n: u32) -> Timestamp {
    ymd_hms(2018, 8, n, 0, 0, 0)
}

#[test]
fn nightly_lsp_without_outages_keeps_up() {
    let mut t = tables(daily(1..=8), daily(1..=5));
    let clock = Clock {
        from: day(6),
        to: day(8) + Duration::hours(23),
    };
    let log = run_jobs(&[job("nightly", "0 9 * * *", "lsp:ts")], clock, &[], &mut t).unwrap();
    assert_eq!(log.len(), 3);
    for entry in &log {
        match &entry.outcome {
            Outcome::Ran { report } => assert_eq!(report.records_added, 1),
            other => panic!("{other:?}"),
        }
    }
    assert!(t["wh"].contents_eq(&t["src"]));
}

#[test]
fn offset_catches_up_after_an_outage() {
    let mut t = tables(daily(1..=10), daily(1..=3));
    let clock = Clock {
        from: day(4),
        to: day(10) + Duration::hours(23),
    };
    let outage = OutageWindow::new(day(5), day(7)).unwrap();
    let log = run_jobs(&[job("nightly", "0 9 * * *", "olsp:ts:3")], clock, &[outage], &mut t).unwrap();
    let skipped: Vec<_> = log
        .iter()
        .filter(|e| e.outcome == Outcome::Skipped)
        .map(|e| e.instant)
        .collect();
    assert_eq!(skipped, [day(5) + Duration::hours(9), day(6) + Duration::hours(9)]);
    let catch_up = log.iter().find(|e| e.instant == day(7) + Duration::hours(9)).unwrap();
    match &catch_up.outcome {
        Outcome::Ran { report } => {
            assert_eq!(report.records_added, 3);
            assert!(report.duplicates_removed >= 1);
        }
        other => panic!("{other:?}"),
    }
    assert!(t["wh"].contents_eq(&t["src"]));
}

#[test]
fn runs_are_deterministic() {
    let jobs = [
        job("b", "*/30 8-10 * * *", "olsp:ts:2"),
        job("a", "0 9 * * *", "match:seq"),
    ];
    let clock = Clock {
        from: day(2),
        to: day(9),
    };
    let outage = OutageWindow::new(day(4), day(5) + Duration::hours(9)).unwrap();
    let run = || {
        let mut t = tables(daily(1..=9), daily(1..=1));
        let log = run_jobs(&jobs, clock, &[outage], &mut t).unwrap();
        (log, t)
    };
    let (log1, t1) = run();
    let (log2, t2) = run();
    assert_eq!(log1, log2);
    assert!(t1["wh"].contents_eq(&t2["wh"]));
    let same_minute: Vec<&str> = log1
        .iter()
        .filter(|e| e.instant == day(3) + Duration::hours(9))
        .map(|e| e.job.as_str())
        .collect();
    assert_eq!(same_minute, ["a", "b"]);
}

#[test]
fn empty_and_failing_jobs() {
    let clock = Clock {
        from: day(1),
        to: day(3),
    };
    let mut t = tables(daily(1..=3), daily(1..=1));
    assert!(run_jobs(&[], clock, &[], &mut t).unwrap().is_empty());

    let mut broken = job("broken", "0 0 * * *", "lsp:ts");
    broken.action.dest = "nowhere".into();
    let log = run_jobs(&[broken, job("ok", "0 0 * * *", "lsp:ts")], clock, &[], &mut t).unwrap();
    assert!(log.iter().filter(|e| e.job == "broken").all(|e| matches!(&e.outcome,
        Outcome::Failed { error } if error.starts_with("MissingTable"))));
    assert!(log
        .iter()
        .filter(|e| e.job == "ok")
        .all(|e| matches!(e.outcome, Outcome::Ran { .. })));

    let twice = [job("x", "0 0 * * *", "lsp:ts"), job("x", "0 1 * * *", "lsp:ts")];
    assert!(matches!(
        run_jobs(&twice, clock, &[], &mut t),
        Err(Error::DuplicateJob(_))
    ));
    assert!(matches!(OutageWindow::new(day(2), day(2)), Err(Error::InvalidValue(_))));
}

#[test]
fn jobs_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    save_table(&daily(1..=6), &dir.path().join("src.csv")).unwrap();
    save_table(&daily(1..=2), &dir.path().join("wh.csv")).unwrap();
    let jobs = r#"{"jobs": [{"name": "nightly", "cron": "30 2 * * *",
        "source": "src.csv", "dest": "wh.csv", "technique": "olsp:ts:2"}]}"#;
    let path = dir.path().join("jobs.json");
    fs::write(&path, jobs).unwrap();
    let log = run_jobs_files(
        &path,
        Clock {
            from: day(3),
            to: day(7) + Duration::hours(3),
        },
        &[],
    )
    .unwrap();
    assert_eq!(log.len(), 5);
    let wh = load_table(&dir.path().join("wh.csv")).unwrap();
    assert!(wh.contents_eq(&daily(1..=6)));
    assert_eq!(
        watermark_of(&wh, "ts").unwrap().0,
        daily_record(6).get(2).as_timestamp()
    );

    assert!(matches!(
        parse_jobs(r#"{"jobs": [{"name": "x"}]}"#),
        Err(Error::Json(_))
    ));
    let bad = jobs.replace("30 2", "30 25");
    assert!(matches!(
        parse_jobs(&bad),
        Err(Error::InvalidCronExpression { field: 2, .. })
    ));
    fs::write(&path, "{\n\"jobs\": [\n").unwrap();
    assert!(matches!(
        run_jobs_files(
            &path,
            Clock {
                from: day(3),
                to: day(7)
            },
            &[]
        ),
        Err(Error::Format { .. })
    ));
}
