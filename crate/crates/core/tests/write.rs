use grainstore::bench::{generate_records, GenSpec};
use grainstore::fixtures::customer_schema;
use grainstore::write::{insert, BatchShape, InsertStrategy};
use grainstore::{Error, FieldValue, Record, Table};
use proptest::prelude::*;

fn strategy() -> impl Strategy<Value = InsertStrategy> {
    prop_oneof![
        Just("successive".to_owned()),
        Just("bulk".to_owned()),
        (1usize..12).prop_map(|k| format!("partitioned:{k}")),
        (1usize..5).prop_map(|w| format!("parallel:{w}:bulk")),
        (1usize..5, 1usize..12).prop_map(|(w, k)| format!("parallel:{w}:partitioned:{k}")),
    ]
    .prop_map(|s| s.parse().unwrap())
}

fn seeded(n: usize) -> Table {
    let mut t = Table::new(customer_schema());
    t.append_committed(generate_records(GenSpec::new(n, 99))).unwrap();
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn strategies_append_in_order(s in strategy(), pre in 0usize..5, n in 0usize..40, seed in any::<u64>()) {
        let records = generate_records(GenSpec::new(n, seed));
        let mut t = seeded(pre);
        let before = t.records().to_vec();
        let out = insert(&mut t, records.clone(), s).unwrap();
        prop_assert_eq!(out.records_added, n);
        prop_assert_eq!(out.commits, s.commit_count(n));
        prop_assert_eq!(&t.records()[..pre], before.as_slice());
        prop_assert_eq!(&t.records()[pre..], records.as_slice());
        prop_assert_eq!(s.to_string().parse::<InsertStrategy>().unwrap(), s);
    }

    #[test]
    fn failures_keep_only_whole_commits(s in strategy(), n in 1usize..30, bad_at in 0usize..30) {
        let bad_at = bad_at % n;
        let mut records = generate_records(GenSpec::new(n, 5));
        records[bad_at].set(0, FieldValue::from("not a number"));
        let mut t = seeded(2);
        let err = insert(&mut t, records.clone(), s).unwrap_err();
        prop_assert!(matches!(err, Error::SchemaMismatch { .. }), "{:?}", err);
        let kept = t.len() - 2;
        let expected = match s {
            InsertStrategy::Successive => bad_at,
            InsertStrategy::Partitioned { size }
            | InsertStrategy::Parallel { inner: BatchShape::Partitioned { size }, .. } => bad_at / size.get() * size.get(),
            _ => 0,
        };
        prop_assert_eq!(kept, expected);
        prop_assert_eq!(&t.records()[2..], &records[..kept]);
    }
}

#[test]
fn strategy_spellings() {
    for bad in [
        "",
        "partitioned:0",
        "parallel:0:bulk",
        "parallel:2",
        "parallel:2:successive",
        "batch",
    ] {
        assert!(bad.parse::<InsertStrategy>().is_err(), "{bad}");
    }
    assert_eq!(InsertStrategy::partitioned(100).unwrap().commit_count(536), 6);
    assert_eq!(InsertStrategy::Successive.commit_count(536), 536);
    let mut t = Table::new(customer_schema());
    let wrong_width = Record::new(vec![1.into()]);
    assert!(insert(&mut t, vec![wrong_width], InsertStrategy::Bulk).is_err());
    assert!(t.is_empty());
}
