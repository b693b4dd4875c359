//! Per-class usage models inferred from call sequences.
//!
//! A model is a 2-gram transition system: the state after an action is
//! identified by that action alone, so two sequences sharing an action can
//! continue with each other's suffixes.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rand::seq::IteratorRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::SequenceMap;

/// Length of the action history that identifies a state, plus one.
pub const GRAM_ORDER: usize = 2;
pub const DEFAULT_MAX_PATH_LENGTH: usize = 20;
/// Chance of stopping a random walk at a state where some sequence ended.
pub const STOP_PROBABILITY: f64 = 0.5;

const START: &str = "<start>";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum State {
    Initial,
    After(String),
}

impl State {
    fn parse(text: &str) -> State {
        if text == START {
            State::Initial
        } else {
            State::After(text.to_string())
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            State::Initial => f.write_str(START),
            State::After(a) => f.write_str(a),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("empty model for class {0}")]
    Empty(String),
    #[error("maximum path length must be at least 1")]
    ZeroLength,
    #[error("model text line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelStats {
    pub states: usize,
    pub transitions: usize,
    /// Largest breadth-first depth of any state below the initial one.
    pub bfs_height: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionSystem {
    pub class: String,
    /// Outgoing actions per state; an action `a` always leads to `After(a)`.
    outgoing: BTreeMap<State, BTreeSet<String>>,
    terminals: BTreeSet<State>,
}

/// Builds the 2-gram model of `class` from its call sequences. The result
/// only depends on the set of sequences, not their order.
pub fn infer_model<'a>(class: &str, sequences: impl IntoIterator<Item = &'a [String]>) -> TransitionSystem {
    let mut model = TransitionSystem::empty(class);
    for seq in sequences {
        let Some(last) = seq.last() else { continue };
        let mut from = State::Initial;
        for action in seq {
            model.outgoing.entry(from).or_default().insert(action.clone());
            from = State::After(action.clone());
        }
        model.terminals.insert(State::After(last.clone()));
    }
    model
}

/// One model per class present in `sequences`.
pub fn infer_models(sequences: &SequenceMap) -> BTreeMap<String, TransitionSystem> {
    sequences
        .iter()
        .map(|(class, seqs)| {
            let model = infer_model(class, seqs.iter().map(|s| s.actions.as_slice()));
            (class.clone(), model)
        })
        .collect()
}

impl TransitionSystem {
    pub fn empty(class: &str) -> Self {
        Self {
            class: class.to_string(),
            outgoing: BTreeMap::new(),
            terminals: BTreeSet::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.outgoing.is_empty()
    }

    /// All states, the initial one included.
    pub fn states(&self) -> BTreeSet<State> {
        let mut out: BTreeSet<State> = self
            .outgoing
            .values()
            .flatten()
            .map(|a| State::After(a.clone()))
            .collect();
        out.insert(State::Initial);
        out
    }

    /// `(from, action, to)` triples in state order.
    pub fn transitions(&self) -> impl Iterator<Item = (&State, &str, State)> {
        self.outgoing
            .iter()
            .flat_map(|(from, actions)| actions.iter().map(move |a| (from, a.as_str(), State::After(a.clone()))))
    }

    pub fn actions_from(&self, state: &State) -> impl Iterator<Item = &str> {
        self.outgoing.get(state).into_iter().flatten().map(String::as_str)
    }

    pub fn terminals(&self) -> &BTreeSet<State> {
        &self.terminals
    }

    /// Whether `sequence` walks a path from the initial state. Prefixes of
    /// learned paths are accepted.
    pub fn accepts<S: AsRef<str>>(&self, sequence: &[S]) -> bool {
        let mut state = State::Initial;
        for action in sequence {
            let action = action.as_ref();
            if !self.outgoing.get(&state).is_some_and(|a| a.contains(action)) {
                return false;
            }
            state = State::After(action.to_string());
        }
        true
    }

    pub fn has_cycle(&self) -> bool {
        // Kahn's algorithm over the reachable graph.
        let states = self.states();
        let mut indegree: BTreeMap<&State, usize> = states.iter().map(|s| (s, 0)).collect();
        let targets: Vec<(State, State)> = self.transitions().map(|(f, _, t)| (f.clone(), t)).collect();
        for (_, to) in &targets {
            *indegree.get_mut(to).expect("target is a state") += 1;
        }
        let mut queue: VecDeque<State> = indegree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(s, _)| (*s).clone())
            .collect();
        let mut removed = 0;
        while let Some(s) = queue.pop_front() {
            removed += 1;
            for (from, to) in &targets {
                if *from == s {
                    let d = indegree.get_mut(to).expect("target is a state");
                    *d -= 1;
                    if *d == 0 {
                        queue.push_back(to.clone());
                    }
                }
            }
        }
        removed < states.len()
    }

    pub fn stats(&self) -> ModelStats {
        let mut depth: BTreeMap<State, usize> = BTreeMap::new();
        depth.insert(State::Initial, 0);
        let mut queue = VecDeque::from([State::Initial]);
        while let Some(s) = queue.pop_front() {
            let d = depth[&s];
            for a in self.actions_from(&s) {
                let next = State::After(a.to_string());
                if !depth.contains_key(&next) {
                    depth.insert(next.clone(), d + 1);
                    queue.push_back(next);
                }
            }
        }
        ModelStats {
            states: self.states().len(),
            transitions: self.outgoing.values().map(BTreeSet::len).sum(),
            bfs_height: depth.values().copied().max().unwrap_or(0),
        }
    }

    /// Uniform random walk from the initial state. At a state where some
    /// training sequence ended, the walk stops with probability one half.
    pub fn random_path<R: Rng + ?Sized>(&self, max_length: usize, rng: &mut R) -> Result<Vec<String>, ModelError> {
        if self.is_empty() {
            return Err(ModelError::Empty(self.class.clone()));
        }
        if max_length == 0 {
            return Err(ModelError::ZeroLength);
        }
        let mut path = Vec::new();
        let mut state = State::Initial;
        while path.len() < max_length {
            if self.terminals.contains(&state) && rng.gen_bool(STOP_PROBABILITY) {
                break;
            }
            let Some(action) = self.actions_from(&state).choose(rng) else {
                break;
            };
            path.push(action.to_string());
            state = State::After(action.to_string());
        }
        Ok(path)
    }

    /// Text form: `class`, `terminals` header lines, then one sorted
    /// `from<TAB>action<TAB>to` line per transition.
    pub fn to_text(&self) -> String {
        let terminals: Vec<String> = self.terminals.iter().map(State::to_string).collect();
        let mut lines: Vec<String> = self.transitions().map(|(f, a, t)| format!("{f}\t{a}\t{t}")).collect();
        lines.sort();
        let mut out = format!("class\t{}\nterminals\t{}\n", self.class, terminals.join(","));
        for l in lines {
            out.push_str(&l);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ModelError> {
        let err = |line: usize, message: &str| ModelError::Parse {
            line,
            message: message.to_string(),
        };
        let mut lines = text.lines().enumerate();
        let class = match lines.next().map(|(_, l)| l.split_once('\t')) {
            Some(Some(("class", c))) if !c.is_empty() => c,
            _ => return Err(err(1, "expected `class<TAB>name`")),
        };
        let mut model = TransitionSystem::empty(class);
        match lines.next().map(|(_, l)| l.split_once('\t')) {
            Some(Some(("terminals", list))) => {
                model.terminals = list.split(',').filter(|t| !t.is_empty()).map(State::parse).collect();
            }
            _ => return Err(err(2, "expected `terminals<TAB>list`")),
        }
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            let [from, action, to] = parts[..] else {
                return Err(err(i + 1, "expected `from<TAB>action<TAB>to`"));
            };
            if to != action {
                return Err(err(i + 1, "target state must be named after the action"));
            }
            model.outgoing.entry(State::parse(from)).or_default().insert(action.to_string());
        }
        let states = model.states();
        if model.outgoing.keys().chain(&model.terminals).any(|s| !states.contains(s)) {
            return Err(err(1, "state without incoming transition"));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn seq(s: &str) -> Vec<String> {
        s.split(',').filter(|a| !a.is_empty()).map(str::to_string).collect()
    }

    fn model(seqs: &[&str]) -> TransitionSystem {
        let owned: Vec<Vec<String>> = seqs.iter().map(|s| seq(s)).collect();
        infer_model("C", owned.iter().map(Vec::as_slice))
    }

    fn iterator_model() -> TransitionSystem {
        model(&["hasNext,next", "hasNext,next,hasNext,next"])
    }

    #[test]
    fn iterator_corpus_has_a_loop() {
        let m = iterator_model();
        assert!(m.has_cycle());
        assert!(m.accepts(&seq("hasNext,next,hasNext,next,hasNext,next")));
        let edges: Vec<String> = m.transitions().map(|(f, a, t)| format!("{f}-{a}->{t}")).collect();
        assert_eq!(
            edges,
            vec!["<start>-hasNext->hasNext", "hasNext-next->next", "next-hasNext->hasNext"]
        );
        assert_eq!(
            m.stats(),
            ModelStats {
                states: 3,
                transitions: 3,
                bfs_height: 2
            }
        );
    }

    #[test]
    fn single_action() {
        let m = model(&["m"]);
        assert_eq!(m.states().len(), 2);
        assert_eq!(m.stats().transitions, 1);
        assert_eq!(m.terminals().iter().collect::<Vec<_>>(), vec![&State::After("m".into())]);
    }

    #[test]
    fn branching_state() {
        let m = model(&["a,b", "a,c"]);
        let out: Vec<&str> = m.actions_from(&State::After("a".into())).collect();
        assert_eq!(out, vec!["b", "c"]);
    }

    #[test]
    fn acceptance() {
        let m = model(&["a,b"]);
        assert!(m.accepts(&seq("a,b")));
        assert!(!m.accepts(&seq("b")));
        assert!(m.accepts::<String>(&[]));
    }

    #[test]
    fn stats_of_small_models() {
        let empty = model(&[]);
        assert!(empty.is_empty());
        assert_eq!(
            empty.stats(),
            ModelStats {
                states: 1,
                transitions: 0,
                bfs_height: 0
            }
        );
        assert_eq!(
            model(&["a,b,c"]).stats(),
            ModelStats {
                states: 4,
                transitions: 3,
                bfs_height: 3
            }
        );
    }

    #[test]
    fn random_path_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(model(&[]).random_path(5, &mut rng), Err(ModelError::Empty("C".into())));
        assert_eq!(model(&["m"]).random_path(0, &mut rng), Err(ModelError::ZeroLength));
        for _ in 0..50 {
            assert_eq!(model(&["m"]).random_path(5, &mut rng).unwrap(), seq("m"));
        }
    }

    #[test]
    fn iterator_walks_alternate() {
        let m = iterator_model();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut lengths = BTreeSet::new();
        for _ in 0..500 {
            let p = m.random_path(6, &mut rng).unwrap();
            assert!(!p.is_empty() && p.len() <= 6);
            for (i, a) in p.iter().enumerate() {
                assert_eq!(a, if i % 2 == 0 { "hasNext" } else { "next" });
            }
            lengths.insert(p.len());
        }
        assert!(lengths.contains(&6));
    }

    #[test]
    fn text_round_trip() {
        let m = model(&["<init>/0,a,b", "a,c", "b"]);
        let text = m.to_text();
        assert!(text.starts_with("class\tC\nterminals\tb,c\n<init>/0\ta\ta\n<start>\t<init>/0\t<init>/0\n"));
        assert_eq!(TransitionSystem::from_text(&text).unwrap(), m);
        assert!(TransitionSystem::from_text("class\tC\nterminals\t\nx\ty\tz\n").is_err());
    }

    fn corpus() -> impl Strategy<Value = Vec<Vec<String>>> {
        let action = prop_oneof![Just("a"), Just("b"), Just("c"), Just("d"), Just("<init>/0")].prop_map(String::from);
        proptest::collection::vec(proptest::collection::vec(action, 1..=8), 0..=10)
    }

    proptest! {
        #[test]
        fn training_sequences_are_accepted(c in corpus()) {
            let m = infer_model("C", c.iter().map(Vec::as_slice));
            for s in &c {
                prop_assert!(m.accepts(s));
            }
        }

        #[test]
        fn inference_ignores_order(c in corpus(), seed in any::<u64>()) {
            let mut shuffled = c.clone();
            use rand::seq::SliceRandom;
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let a = infer_model("C", c.iter().map(Vec::as_slice)).to_text();
            let b = infer_model("C", shuffled.iter().map(Vec::as_slice)).to_text();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn shared_actions_splice(c in corpus(), i in 0usize..10, j in 0usize..10) {
            prop_assume!(c.len() >= 2);
            let (x, y) = (&c[i % c.len()], &c[j % c.len()]);
            let m = infer_model("C", c.iter().map(Vec::as_slice));
            for (p, a) in x.iter().enumerate() {
                if let Some(q) = y.iter().position(|b| b == a) {
                    let spliced: Vec<String> = x[..=p].iter().chain(&y[q + 1..]).cloned().collect();
                    prop_assert!(m.accepts(&spliced));
                }
            }
        }

        #[test]
        fn random_paths_are_accepted(c in corpus(), seed in any::<u64>()) {
            let m = infer_model("C", c.iter().map(Vec::as_slice));
            prop_assume!(!m.is_empty());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..10 {
                let p = m.random_path(DEFAULT_MAX_PATH_LENGTH, &mut rng).unwrap();
                prop_assert!(!p.is_empty());
                prop_assert!(m.accepts(&p));
            }
        }

        #[test]
        fn stats_are_bounded(c in corpus()) {
            let s = infer_model("C", c.iter().map(Vec::as_slice)).stats();
            prop_assert!(s.bfs_height <= s.states);
        }
    }
}
