//! Test seeding sources: objects carved from test executions and whole
//! tests cloned without their assertions.

use std::collections::{BTreeMap, BTreeSet};

use log::{debug, warn};

use super::TEST_SEEDING_UNAVAILABLE;
use crate::sutlang::interp::{exceptions, ArgValue, CallEvent};
use crate::sutlang::{execute_test, Arg, Fragment, Literal, Program, Statement, TestCase, CONSTRUCTOR, DEFAULT_STEP_LIMIT};

/// Nesting limit for objects passed as arguments to carved calls.
const MAX_CARVE_DEPTH: usize = 3;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CarveReport {
    pub objects: Vec<Fragment>,
    /// Candidate fragments rejected because they could not be rebuilt or replayed.
    pub dropped: usize,
    pub skipped_tests: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CloneReport {
    pub tests: Vec<TestCase>,
    pub skipped_tests: Vec<(String, String)>,
}

/// Rebuilds each object of a `classes` member that a test constructed
/// directly: its constructor, then the test-level calls it received, with
/// the argument values observed at run time.
pub fn carve_objects(program: &Program, tests: &[TestCase], classes: &BTreeSet<String>) -> CarveReport {
    let mut report = CarveReport::default();
    let mut seen = BTreeSet::new();
    for test in tests {
        let result = execute_test(program, test, DEFAULT_STEP_LIMIT);
        if result.is_unusable() {
            let exception = result.thrown.map(|t| t.exception).unwrap_or_default();
            warn!("test {} cannot be carved: {exception}", test.name);
            report.skipped_tests.push((test.name.clone(), exception));
            continue;
        }
        // Calls made by the statement that threw would throw again on replay.
        let horizon = match &result.thrown {
            Some(_) => result.statements_started - 1,
            None => usize::MAX,
        };
        let mut per_object: BTreeMap<u64, Vec<&CallEvent>> = BTreeMap::new();
        for e in result.call_events.iter().filter(|e| e.from_harness && e.statement < horizon) {
            per_object.entry(e.object).or_default().push(e);
        }
        for (&id, events) in &per_object {
            if !classes.contains(&*events[0].class) || &*events[0].method != CONSTRUCTOR {
                continue;
            }
            let mut carver = Carver {
                per_object: &per_object,
                statements: Vec::new(),
                next_var: 0,
            };
            let Some(var) = carver.object(id, usize::MAX, 0) else {
                report.dropped += 1;
                continue;
            };
            let fragment = Fragment {
                class: events[0].class.to_string(),
                object_var: var,
                statements: carver.statements,
            };
            let text = fragment.to_string();
            if !seen.insert(text) {
                continue;
            }
            let replay = execute_test(program, &fragment.as_test("carved"), DEFAULT_STEP_LIMIT);
            if let Some(t) = replay.thrown {
                debug!("carved {} fragment dropped on replay: {}", fragment.class, t.exception);
                report.dropped += 1;
                continue;
            }
            report.objects.push(fragment);
        }
    }
    report
}

struct Carver<'a, 'e> {
    per_object: &'a BTreeMap<u64, Vec<&'e CallEvent>>,
    statements: Vec<Statement>,
    next_var: usize,
}

impl Carver<'_, '_> {
    /// Emits statements rebuilding object `id` as it was before test
    /// statement `before`; returns the variable holding it.
    fn object(&mut self, id: u64, before: usize, depth: usize) -> Option<String> {
        if depth > MAX_CARVE_DEPTH {
            return None;
        }
        let events = self.per_object.get(&id)?;
        let ctor = events.first().filter(|e| &*e.method == CONSTRUCTOR && e.statement < before)?;
        let var = format!("o{}", self.next_var);
        self.next_var += 1;
        let args = self.args(&ctor.args, ctor.statement, depth)?;
        self.statements.push(Statement::Construct {
            var: var.clone(),
            class: ctor.class.to_string(),
            args,
        });
        for e in events[1..].iter().filter(|e| e.statement < before) {
            let args = self.args(&e.args, e.statement, depth)?;
            self.statements.push(Statement::Call {
                result: None,
                receiver: var.clone(),
                method: e.method.to_string(),
                args,
            });
        }
        Some(var)
    }

    fn args(&mut self, values: &[ArgValue], at: usize, depth: usize) -> Option<Vec<Arg>> {
        values
            .iter()
            .map(|v| {
                Some(match v {
                    ArgValue::Int(i) => Arg::Lit(Literal::Int(*i)),
                    ArgValue::Bool(b) => Arg::Lit(Literal::Bool(*b)),
                    ArgValue::Str(s) => Arg::Lit(Literal::Str(s.clone())),
                    ArgValue::Null => Arg::Lit(Literal::Null),
                    ArgValue::Object { id, .. } => Arg::Var(self.object(*id, at, depth + 1)?),
                })
            })
            .collect()
    }
}

/// Copies every test whose execution touches one of `classes`, internal
/// calls included, minus its assertions. A test that crashed is cut after
/// the statement that threw.
pub fn clone_tests(program: &Program, tests: &[TestCase], classes: &BTreeSet<String>) -> CloneReport {
    let mut report = CloneReport::default();
    for test in tests {
        let result = execute_test(program, test, DEFAULT_STEP_LIMIT);
        if result.is_unusable() {
            let exception = result.thrown.map(|t| t.exception).unwrap_or_default();
            warn!("test {} cannot be cloned: {exception}", test.name);
            report.skipped_tests.push((test.name.clone(), exception));
            continue;
        }
        if !result.call_events.iter().any(|e| classes.contains(&*e.class)) {
            continue;
        }
        let keep = match &result.thrown {
            Some(t) if t.exception != exceptions::ASSERTION_FAILED => result.statements_started,
            _ => test.len(),
        };
        let clone = TestCase::new(test.name.clone(), test.statements[..keep].to_vec()).without_assertions();
        if !clone.is_empty() {
            report.tests.push(clone);
        }
    }
    if report.tests.is_empty() {
        warn!("{TEST_SEEDING_UNAVAILABLE}: no test could be cloned");
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sutlang::{parse_program, parse_tests, SourceFile};

    const SRC: &str = "\
class List {
  field size: int;
  def add(int x) { this.size = this.size + 1; }
  def get(int i): int {
    if (i >= this.size) { throw OutOfBounds(\"index \" + i); }
    return i;
  }
}
class Holder {
  field list: List;
  new(List l) { this.list = l; }
  def first(): int { return this.list.get(0); }
}
class User {
  def use(Holder h): int { return h.first(); }
}
class Other {
  def nothing() { }
}
";

    fn program() -> Program {
        parse_program(&[SourceFile::new("l.sut", SRC)]).unwrap()
    }

    fn classes(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn carves_constructor_and_calls() {
        let t = parse_tests("t", "test t { l = new List(); x = 4; l.add(x); l.add(5); assert l.get(0) == 0; }").unwrap();
        let r = carve_objects(&program(), &t, &classes(&["List"]));
        assert_eq!(r.objects.len(), 1);
        let f = &r.objects[0];
        assert_eq!(f.to_string(), "o0 = new List();\no0.add(4);\no0.add(5);\no0.get(0);\n");
    }

    #[test]
    fn nothing_to_carve() {
        let t = parse_tests("t", "test t { o = new Other(); o.nothing(); }").unwrap();
        assert!(carve_objects(&program(), &t, &classes(&["List"])).objects.is_empty());
    }

    #[test]
    fn object_arguments_are_carved_recursively() {
        let t = parse_tests("t", "test t { l = new List(); l.add(1); h = new Holder(l); h.first(); }").unwrap();
        let r = carve_objects(&program(), &t, &classes(&["Holder"]));
        assert_eq!(r.objects.len(), 1);
        assert_eq!(
            r.objects[0].to_string(),
            "o1 = new List();\no1.add(1);\no0 = new Holder(o1);\no0.first();\n"
        );
        assert_eq!(r.objects[0].object_var, "o0");
    }

    #[test]
    fn argument_built_inside_the_program_drops_fragment() {
        let src = format!("{SRC}class Maker {{ def make(): List {{ return new List(); }} }}\n");
        let p = parse_program(&[SourceFile::new("l.sut", &src)]).unwrap();
        let t = parse_tests("t", "test t { m = new Maker(); l = m.make(); h = new Holder(l); }").unwrap();
        let r = carve_objects(&p, &t, &classes(&["Holder"]));
        assert!(r.objects.is_empty());
        assert_eq!(r.dropped, 1);
    }

    #[test]
    fn throwing_call_is_not_carved() {
        let t = parse_tests("t", "test t { l = new List(); l.add(1); l.get(3); }").unwrap();
        let r = carve_objects(&program(), &t, &classes(&["List"]));
        assert_eq!(r.objects[0].statements.len(), 2);
    }

    #[test]
    fn carved_fragments_replay_cleanly() {
        let p = program();
        let t = parse_tests(
            "t",
            "test a { l = new List(); l.add(3); h = new Holder(l); u = new User(); u.use(h); }
             test b { l = new List(); h = new Holder(l); h.first(); }",
        )
        .unwrap();
        let r = carve_objects(&p, &t, &classes(&["List", "Holder", "User"]));
        assert!(!r.objects.is_empty());
        for f in &r.objects {
            assert!(execute_test(&p, &f.as_test("r"), DEFAULT_STEP_LIMIT).thrown.is_none(), "{f}");
        }
    }

    #[test]
    fn clones_strip_assertions() {
        let t = parse_tests("t", "test t { l = new List(); l.add(1); assert l.get(0) == 0; }").unwrap();
        let r = clone_tests(&program(), &t, &classes(&["List"]));
        assert_eq!(r.tests.len(), 1);
        assert_eq!(r.tests[0].len(), 2);
    }

    #[test]
    fn clone_detection_follows_internal_calls() {
        // the test never names List, but Holder calls into it
        let t = parse_tests("t", "test t { h = new Holder(null); u = new User(); }").unwrap();
        assert!(clone_tests(&program(), &t, &classes(&["List"])).tests.is_empty());
        let t = parse_tests("t", "test t { l = new List(); l.add(2); h = new Holder(l); u = new User(); u.use(h); }").unwrap();
        let user_touched = clone_tests(&program(), &t, &classes(&["User"]));
        assert_eq!(user_touched.tests.len(), 1);
        let t = parse_tests("t", "test t { n = null; h = new Holder(n); z = new Other(); }").unwrap();
        assert!(clone_tests(&program(), &t, &classes(&["List"])).tests.is_empty());
    }

    #[test]
    fn internal_touch_is_enough() {
        let src = format!("{SRC}class Wrapper {{ def go(): int {{ let l = new List(); l.add(1); return l.get(0); }} }}\n");
        let p = parse_program(&[SourceFile::new("l.sut", &src)]).unwrap();
        let t = parse_tests("t", "test t { w = new Wrapper(); w.go(); }").unwrap();
        let r = clone_tests(&p, &t, &classes(&["List"]));
        assert_eq!(r.tests.len(), 1);
        assert!(r.tests[0].referenced_classes().contains("Wrapper"));
    }

    #[test]
    fn all_failing_tests_leave_empty_pool() {
        let t = parse_tests("t", "test t { y.add(1); } test u { l = new Nope(); }").unwrap();
        let r = clone_tests(&program(), &t, &classes(&["List"]));
        assert!(r.tests.is_empty());
        assert_eq!(r.skipped_tests.len(), 2);
    }
}
