use crate::error::{Error, Result};
use crate::value::FieldValue;

fn check_ascending<'a>(ordinals: impl IntoIterator<Item = &'a usize>) -> Result<()> {
    let mut prev = 0;
    for (position, &o) in ordinals.into_iter().enumerate() {
        if o <= prev {
            return Err(Error::NonAscendingIndices { position: position + 1 });
        }
        prev = o;
    }
    Ok(())
}

/// One `(key, ordinal)` row per aggregated ordinal.
pub fn row_explode(key: &FieldValue, ordinals: &[usize]) -> Result<Vec<(FieldValue, usize)>> {
    check_ascending(ordinals)?;
    Ok(ordinals.iter().map(|&o| (key.clone(), o)).collect())
}

/// Inverse of [`row_explode`] for a nonempty run of pairs.
pub fn row_implode(pairs: &[(FieldValue, usize)]) -> Result<(FieldValue, Vec<usize>)> {
    let (key, _) = pairs
        .first()
        .ok_or_else(|| Error::InvalidValue("cannot implode an empty sequence".into()))?;
    if let Some((other, _)) = pairs.iter().find(|(k, _)| k != key) {
        return Err(Error::MixedKeys {
            first: key.to_string(),
            other: other.to_string(),
        });
    }
    check_ascending(pairs.iter().map(|(_, o)| o))?;
    Ok((key.clone(), pairs.iter().map(|(_, o)| *o).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn explode_empty_and_errors() {
        let k = FieldValue::text("k");
        assert!(row_explode(&k, &[]).unwrap().is_empty());
        assert!(matches!(
            row_explode(&k, &[3, 3]),
            Err(Error::NonAscendingIndices { position: 2 })
        ));
        assert!(row_explode(&k, &[0]).is_err());
        assert_eq!(row_implode(&[(k.clone(), 7)]).unwrap(), (k.clone(), vec![7]));
        assert!(matches!(
            row_implode(&[(k, 1), ("j".into(), 2)]),
            Err(Error::MixedKeys { .. })
        ));
    }

    proptest! {
        #[test]
        fn implode_inverts_explode(key in "[0-9]{1,20}", set in prop::collection::btree_set(1usize..10_000, 1..40)) {
            let key = FieldValue::Text(key);
            let ordinals: Vec<usize> = set.into_iter().collect();
            let rows = row_explode(&key, &ordinals).unwrap();
            prop_assert_eq!(rows.len(), ordinals.len());
            prop_assert_eq!(row_implode(&rows).unwrap(), (key, ordinals));
        }
    }
}
