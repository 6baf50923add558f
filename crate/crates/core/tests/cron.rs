mod common;

use chrono::{Duration, Timelike};
use common::OracleCron;
use grainstore::cron::{parse_cron, CronSchedule};
use grainstore::value::ymd_hms;
use grainstore::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn field_of(expr: &str) -> (usize, &'static str) {
    match parse_cron(expr) {
        Err(Error::InvalidCronExpression { field, name, .. }) => (field, name),
        other => panic!("{expr}: {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn parser_never_panics(expr in "[0-9*,/ -]{0,24}") {
        if let Ok(s) = parse_cron(&expr) {
            prop_assert_eq!(s.to_string().parse::<CronSchedule>().unwrap(), s);
        }
    }

    #[test]
    fn fires_land_on_matching_whole_minutes(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (expr, _) = common::random_cron(&mut rng);
        let after = common::random_instant(&mut rng);
        let s = parse_cron(&expr).unwrap();
        if let Ok(t) = s.next_fire(after) {
            prop_assert!(t > after);
            prop_assert_eq!((t.second(), t.nanosecond()), (0, 0));
            prop_assert!(s.matches(t));
            prop_assert!(OracleCron::new(&expr).matches(t));
            prop_assert_eq!(s.next_fire(t - Duration::seconds(1)).unwrap(), t);
        }
    }
}

#[test]
fn expanded_sets_match_the_token_rules() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..500 {
        let (expr, _) = common::random_cron(&mut rng);
        let s = parse_cron(&expr).unwrap();
        let o = OracleCron::new(&expr);
        assert_eq!(s.minutes(), o.set(0), "{expr}");
        assert_eq!(s.hours(), o.set(1), "{expr}");
        assert_eq!(s.days_of_month(), o.set(2), "{expr}");
        assert_eq!(s.months(), o.set(3), "{expr}");
        assert_eq!(s.days_of_week(), o.set(4), "{expr}");
    }
}

#[test]
fn errors_name_the_offending_field() {
    assert_eq!(field_of("61 * * * *"), (1, "minute"));
    assert_eq!(field_of("* 24 * * *"), (2, "hour"));
    assert_eq!(field_of("* * 0 * *"), (3, "day-of-month"));
    assert_eq!(field_of("* * * 13 *"), (4, "month"));
    assert_eq!(field_of("* * * * 7"), (5, "day-of-week"));
    assert_eq!(field_of("*/0 * * * *"), (1, "minute"));
    assert_eq!(field_of("* 5-2 * * *"), (2, "hour"));
    assert_eq!(field_of("* * * *").0, 5);
    assert_eq!(field_of("* * * * * *").0, 6);
    assert_eq!(field_of("").0, 1);
}

#[test]
fn both_day_fields_restricted_means_either() {
    let s = parse_cron("0 12 13 * 5").unwrap();
    // 2018-07-13 was a Friday; 2018-07-20 a Friday; 2018-08-13 a Monday.
    let fires: Vec<_> = std::iter::successors(Some(ymd_hms(2018, 7, 1, 0, 0, 0)), |&t| s.next_fire(t).ok())
        .skip(1)
        .take(4)
        .map(|t| t.date().to_string())
        .collect();
    assert_eq!(fires, ["2018-07-06", "2018-07-13", "2018-07-20", "2018-07-27"]);
    let s = parse_cron("0 0 13 * *").unwrap();
    assert_eq!(
        s.next_fire(ymd_hms(2018, 7, 13, 0, 0, 0)).unwrap(),
        ymd_hms(2018, 8, 13, 0, 0, 0)
    );
}

#[test]
fn rare_and_impossible_dates() {
    let leap = parse_cron("0 0 29 2 *").unwrap();
    assert_eq!(
        leap.next_fire(ymd_hms(2021, 3, 1, 0, 0, 0)).unwrap(),
        ymd_hms(2024, 2, 29, 0, 0, 0)
    );
    let never = parse_cron("0 0 31 2 *").unwrap();
    assert!(matches!(
        never.next_fire(ymd_hms(2018, 1, 1, 0, 0, 0)),
        Err(Error::NoFireWithinHorizon { .. })
    ));
}
