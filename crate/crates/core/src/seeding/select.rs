//! Picking a diverse subset of model paths.

use std::collections::BTreeSet;

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::behmodel::TransitionSystem;

/// A path through a class's model, prior to concretization.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AbstractObjectBehavior {
    pub class: String,
    pub actions: Vec<String>,
}

/// One minus the Jaccard index of the two action sets. Order and
/// repetitions are ignored.
pub fn jaccard_distance<S: AsRef<str>>(a: &[S], b: &[S]) -> f64 {
    let a: BTreeSet<&str> = a.iter().map(AsRef::as_ref).collect();
    let b: BTreeSet<&str> = b.iter().map(AsRef::as_ref).collect();
    set_distance(&a, &b)
}

fn set_distance(a: &BTreeSet<&str>, b: &BTreeSet<&str>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    1.0 - a.intersection(b).count() as f64 / union as f64
}

/// Greedy farthest-point selection of up to `k` distinct candidates. Starts
/// from the longest candidate (lexicographically first among equals), then
/// keeps adding the candidate farthest from everything chosen so far.
pub fn select_from_candidates(candidates: Vec<Vec<String>>, k: usize) -> Vec<Vec<String>> {
    let distinct: Vec<Vec<String>> = candidates.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    if k == 0 || distinct.is_empty() {
        return Vec::new();
    }
    let sets: Vec<BTreeSet<&str>> = distinct
        .iter()
        .map(|c| c.iter().map(String::as_str).collect())
        .collect();
    let seed = (0..distinct.len())
        .max_by(|&i, &j| distinct[i].len().cmp(&distinct[j].len()).then(j.cmp(&i)))
        .expect("non-empty");
    let mut chosen = vec![seed];
    let mut taken = vec![false; distinct.len()];
    taken[seed] = true;
    let mut nearest: Vec<f64> = sets.iter().map(|s| set_distance(s, &sets[seed])).collect();
    while chosen.len() < k.min(distinct.len()) {
        let mut best: Option<usize> = None;
        for i in (0..distinct.len()).filter(|&i| !taken[i]) {
            if best.map_or(true, |b| nearest[i] > nearest[b]) {
                best = Some(i);
            }
        }
        let b = best.expect("candidates left");
        taken[b] = true;
        chosen.push(b);
        for i in 0..distinct.len() {
            nearest[i] = nearest[i].min(set_distance(&sets[i], &sets[b]));
        }
    }
    chosen.into_iter().map(|i| distinct[i].clone()).collect()
}

/// Draws `multiplier * k` random paths from `model` and keeps a diverse
/// subset of at most `k`.
pub fn select_behaviors<R: Rng + ?Sized>(
    model: &TransitionSystem,
    k: usize,
    max_length: usize,
    multiplier: usize,
    rng: &mut R,
) -> Vec<AbstractObjectBehavior> {
    if model.is_empty() {
        warn!("no behaviors selected for {}: empty model", model.class);
        return Vec::new();
    }
    let mut candidates = Vec::with_capacity(multiplier * k);
    for _ in 0..multiplier.max(1) * k {
        match model.random_path(max_length, rng) {
            Ok(p) => candidates.push(p),
            Err(e) => {
                warn!("{e}");
                return Vec::new();
            }
        }
    }
    select_from_candidates(candidates, k)
        .into_iter()
        .map(|actions| AbstractObjectBehavior {
            class: model.class.clone(),
            actions,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behmodel::infer_model;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(s: &str) -> Vec<String> {
        s.split(',').filter(|a| !a.is_empty()).map(str::to_string).collect()
    }

    #[test]
    fn worked_distances() {
        assert_eq!(jaccard_distance(&v("m,n"), &v("m,n")), 0.0);
        assert_eq!(jaccard_distance(&v("m"), &v("n")), 1.0);
        assert_eq!(jaccard_distance(&v("a,b"), &v("b,c")), 1.0 - 1.0 / 3.0);
    }

    #[test]
    fn picks_the_disjoint_candidate() {
        let picked = select_from_candidates(vec![v("a"), v("a,b"), v("c")], 2);
        assert_eq!(picked, vec![v("a,b"), v("c")]);
        // brute force: the chosen pair maximizes the pairwise distance
        let all = [v("a"), v("a,b"), v("c")];
        let best = (0..3)
            .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
            .map(|(i, j)| jaccard_distance(&all[i], &all[j]))
            .fold(0.0, f64::max);
        assert_eq!(jaccard_distance(&picked[0], &picked[1]), best);
    }

    #[test]
    fn single_pick_is_the_longest() {
        assert_eq!(select_from_candidates(vec![v("b,c"), v("a"), v("x,y,z"), v("a,b,c")], 1), vec![v("a,b,c")]);
    }

    #[test]
    fn exhausted_model_returns_every_path() {
        let seqs = [v("m"), v("n")];
        let model = infer_model("C", seqs.iter().map(Vec::as_slice));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let picked = select_behaviors(&model, 5, 20, 10, &mut rng);
        assert_eq!(picked.len(), 2);
        let empty = infer_model("C", std::iter::empty());
        assert!(select_behaviors(&empty, 5, 20, 10, &mut rng).is_empty());
    }

    fn min_pairwise(set: &[&Vec<String>]) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..set.len() {
            for j in i + 1..set.len() {
                m = m.min(jaccard_distance(set[i], set[j]));
            }
        }
        m
    }

    #[test]
    fn greedy_beats_random_subsets() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let alphabet = ["a", "b", "c", "d", "e", "f", "g", "h"];
        let mut wins = 0;
        let trials = 1000;
        for _ in 0..trials {
            let n = rng.gen_range(4..12);
            let candidates: Vec<Vec<String>> = (0..n)
                .map(|_| {
                    let len = rng.gen_range(1..5);
                    (0..len).map(|_| alphabet.choose(&mut rng).unwrap().to_string()).collect()
                })
                .collect();
            let distinct: Vec<Vec<String>> = candidates.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
            let k = rng.gen_range(2..=3).min(distinct.len());
            if k < 2 {
                wins += 1;
                continue;
            }
            let greedy = select_from_candidates(candidates, k);
            let random: Vec<&Vec<String>> = distinct.choose_multiple(&mut rng, k).collect();
            if min_pairwise(&greedy.iter().collect::<Vec<_>>()) >= min_pairwise(&random) {
                wins += 1;
            }
        }
        assert!(wins as f64 >= 0.95 * trials as f64, "greedy won {wins}/{trials}");
    }

    fn behavior() -> impl Strategy<Value = Vec<String>> {
        proptest::collection::vec(prop_oneof![Just("a"), Just("b"), Just("c"), Just("d"), Just("e")], 1..6)
            .prop_map(|v| v.into_iter().map(String::from).collect())
    }

    proptest! {
        #[test]
        fn distance_is_a_pseudometric(x in behavior(), y in behavior(), z in behavior()) {
            let d = |p: &Vec<String>, q: &Vec<String>| jaccard_distance(p, q);
            prop_assert_eq!(d(&x, &x), 0.0);
            prop_assert_eq!(d(&x, &y), d(&y, &x));
            prop_assert!((0.0..=1.0).contains(&d(&x, &y)));
            prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-12);
        }

        #[test]
        fn selection_is_distinct_and_bounded(c in proptest::collection::vec(behavior(), 1..30), k in 1usize..8) {
            let picked = select_from_candidates(c.clone(), k);
            let distinct: BTreeSet<_> = c.into_iter().collect();
            prop_assert_eq!(picked.len(), k.min(distinct.len()));
            prop_assert_eq!(picked.iter().collect::<BTreeSet<_>>().len(), picked.len());
        }
    }
}
