//! Summary statistics for experiment reports.

use std::collections::BTreeMap;

use crate::search::Status;

/// Vargha-Delaney A12: the probability that a value drawn from `a` is
/// smaller than one drawn from `b`, ties counting half. Computed from the
/// midrank sum of `b` in the pooled sample. `None` if either sample is empty.
pub fn vargha_delaney_a12(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let mut pooled: Vec<(f64, bool)> = a.iter().map(|&x| (x, false)).chain(b.iter().map(|&x| (x, true))).collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut rank_sum_b = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j + 1 < pooled.len() && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        // ranks i+1..=j+1 share their mean
        let midrank = (i + j + 2) as f64 / 2.0;
        rank_sum_b += midrank * pooled[i..=j].iter().filter(|p| p.1).count() as f64;
        i = j + 1;
    }
    let (m, n) = (a.len() as f64, b.len() as f64);
    Some((rank_sum_b / n - (n + 1.0) / 2.0) / m)
}

/// Most frequent status; ties go to the status that got further.
pub fn majority_outcome(statuses: &[Status]) -> Option<Status> {
    let mut counts: BTreeMap<Status, usize> = BTreeMap::new();
    for s in statuses {
        *counts.entry(*s).or_default() += 1;
    }
    counts.into_iter().max_by_key(|&(s, c)| (c, s)).map(|(s, _)| s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair_counting(a: &[f64], b: &[f64]) -> f64 {
        let mut wins = 0.0;
        for x in a {
            for y in b {
                if x < y {
                    wins += 1.0;
                } else if x == y {
                    wins += 0.5;
                }
            }
        }
        wins / (a.len() * b.len()) as f64
    }

    #[test]
    fn worked_values() {
        assert_eq!(vargha_delaney_a12(&[1.0, 2.0], &[2.0, 3.0]), Some(0.875));
        assert_eq!(vargha_delaney_a12(&[5.0; 4], &[5.0; 3]), Some(0.5));
        assert_eq!(vargha_delaney_a12(&[1.0, 2.0], &[3.0, 4.0]), Some(1.0));
        assert_eq!(vargha_delaney_a12(&[3.0, 4.0], &[1.0, 2.0]), Some(0.0));
        assert_eq!(vargha_delaney_a12(&[], &[1.0]), None);
    }

    #[test]
    fn majority() {
        use Status::*;
        assert_eq!(majority_outcome(&[Reproduced, LineReached, Reproduced]), Some(Reproduced));
        assert_eq!(majority_outcome(&[LineReached, LineNotReached]), Some(LineReached));
        assert_eq!(majority_outcome(&[]), None);
    }

    proptest! {
        #[test]
        fn matches_pair_counting(
            a in proptest::collection::vec(0u8..20, 1..40),
            b in proptest::collection::vec(0u8..20, 1..40),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let ab = vargha_delaney_a12(&a, &b).unwrap();
            prop_assert!((ab - pair_counting(&a, &b)).abs() < 1e-12);
            prop_assert!((ab + vargha_delaney_a12(&b, &a).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
