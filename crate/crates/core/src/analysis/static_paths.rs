//! Intraprocedural call sequences from method bodies.
//!
//! Each method body is unfolded into its acyclic paths (both arms of every
//! `if`; every `while` either skipped or its body taken once). Along a path,
//! calls are grouped by the variable they are made on: `this`, a local or
//! parameter slot, or a field of `this`. Each non-empty group becomes one
//! sequence for the variable's declared or inferred class.

use std::collections::BTreeMap;

use log::warn;

use super::{CallSequence, Origin, SequenceMap};
use crate::sutlang::ast::{constructor_action, ClassDef, Expr, MethodDef, Program, Stmt, StmtKind};

pub const MAX_PATHS_PER_METHOD: usize = 256;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StaticReport {
    pub sequences: SequenceMap,
    /// Methods (`Class.method/arity`) whose paths were cut at the cap.
    pub truncated: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Track {
    This,
    Local(usize),
    Field(String),
}

#[derive(Debug, Clone, Default)]
struct Path {
    events: Vec<(Track, String)>,
    done: bool,
}

pub fn collect_static_sequences(program: &Program) -> StaticReport {
    let mut report = StaticReport::default();
    for class in program.classes() {
        for m in class.constructors.iter().chain(&class.methods) {
            let mut walker = MethodWalker {
                program,
                class,
                slots: slot_classes(program, class, m),
                truncated: false,
            };
            let paths = walker.block(&m.body, vec![Path::default()]);
            if walker.truncated {
                let id = format!("{}.{}/{}", class.name, m.name, m.arity());
                warn!("{id}: more than {MAX_PATHS_PER_METHOD} paths, remaining ones dropped");
                report.truncated.push(id);
            }
            for path in paths {
                let mut per_track: BTreeMap<&Track, Vec<String>> = BTreeMap::new();
                for (track, action) in &path.events {
                    per_track.entry(track).or_default().push(action.clone());
                }
                for (track, actions) in per_track {
                    if let Some(owner) = walker.track_class(track) {
                        report.sequences.entry(owner.clone()).or_default().insert(CallSequence {
                            class: owner,
                            actions,
                            origin: Origin::Static,
                        });
                    }
                }
            }
        }
    }
    report
}

/// Class of every slot: declared kind, else inferred from assignments.
fn slot_classes(program: &Program, class: &ClassDef, m: &MethodDef) -> Vec<Option<String>> {
    let mut slots: Vec<Option<String>> = m
        .locals
        .iter()
        .map(|l| l.declared.as_ref().and_then(|k| k.class_name()).map(str::to_string))
        .collect();
    fn assignments<'a>(stmts: &'a [Stmt], out: &mut Vec<(usize, &'a Expr)>) {
        for s in stmts {
            match &s.kind {
                StmtKind::Assign { slot, value } => out.push((*slot, value)),
                StmtKind::If {
                    then_branch,
                    else_branch,
                    ..
                } => {
                    assignments(then_branch, out);
                    assignments(else_branch, out);
                }
                StmtKind::While { body, .. } => assignments(body, out),
                _ => {}
            }
        }
    }
    let mut assigns = Vec::new();
    assignments(&m.body, &mut assigns);
    // Chains like `a = new A(); b = a;` need a few rounds.
    for _ in 0..3 {
        for &(slot, value) in &assigns {
            if slots[slot].is_none() {
                slots[slot] = static_class(program, class, &slots, value);
            }
        }
    }
    slots
}

fn static_class(program: &Program, class: &ClassDef, slots: &[Option<String>], e: &Expr) -> Option<String> {
    match e {
        Expr::New { class, .. } => Some(class.clone()),
        Expr::This => Some(class.name.to_string()),
        Expr::Local(s) => slots.get(*s).cloned().flatten(),
        Expr::Field(target, field) => {
            let owner = static_class(program, class, slots, target)?;
            let kind = &program.class(&owner)?.field(field)?.kind;
            kind.class_name().map(str::to_string)
        }
        Expr::Call {
            receiver,
            method,
            args,
        } => {
            let owner = static_class(program, class, slots, receiver)?;
            let m = program.class(&owner)?.method(method, args.len())?;
            m.ret.as_ref()?.class_name().map(str::to_string)
        }
        _ => None,
    }
}

struct MethodWalker<'a> {
    program: &'a Program,
    class: &'a ClassDef,
    slots: Vec<Option<String>>,
    truncated: bool,
}

impl MethodWalker<'_> {
    fn track_class(&self, track: &Track) -> Option<String> {
        match track {
            Track::This => Some(self.class.name.to_string()),
            Track::Local(s) => self.slots.get(*s).cloned().flatten(),
            Track::Field(f) => self.class.field(f)?.kind.class_name().map(str::to_string),
        }
        .filter(|c| self.program.class(c).is_some())
    }

    fn cap(&mut self, mut paths: Vec<Path>) -> Vec<Path> {
        if paths.len() > MAX_PATHS_PER_METHOD {
            paths.truncate(MAX_PATHS_PER_METHOD);
            self.truncated = true;
        }
        paths
    }

    fn block(&mut self, stmts: &[Stmt], mut paths: Vec<Path>) -> Vec<Path> {
        for s in stmts {
            let mut next = Vec::with_capacity(paths.len());
            for p in paths {
                if p.done {
                    next.push(p);
                } else {
                    next.extend(self.stmt(s, p));
                }
            }
            paths = self.cap(next);
        }
        paths
    }

    fn stmt(&mut self, s: &Stmt, mut p: Path) -> Vec<Path> {
        match &s.kind {
            StmtKind::Assign { slot, value } => {
                expr_events(value, &mut p.events);
                if let Expr::New { args, .. } = value {
                    p.events.push((Track::Local(*slot), constructor_action(args.len())));
                }
            }
            StmtKind::SetField { target, field, value } => {
                expr_events(target, &mut p.events);
                expr_events(value, &mut p.events);
                if let (Expr::This, Expr::New { args, .. }) = (target, value) {
                    p.events.push((Track::Field(field.clone()), constructor_action(args.len())));
                }
            }
            StmtKind::Expr(e) => expr_events(e, &mut p.events),
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                expr_events(cond, &mut p.events);
                let mut out = self.block(then_branch, vec![p.clone()]);
                out.extend(self.block(else_branch, vec![p]));
                return out;
            }
            StmtKind::While { cond, body } => {
                expr_events(cond, &mut p.events);
                let mut out = self.block(body, vec![p.clone()]);
                for q in out.iter_mut().filter(|q| !q.done) {
                    expr_events(cond, &mut q.events);
                }
                out.push(p);
                return out;
            }
            StmtKind::Return(value) => {
                if let Some(e) = value {
                    expr_events(e, &mut p.events);
                }
                p.done = true;
            }
            StmtKind::Throw { message, .. } => {
                if let Some(e) = message {
                    expr_events(e, &mut p.events);
                }
                p.done = true;
            }
        }
        vec![p]
    }
}

fn track_of(e: &Expr) -> Option<Track> {
    match e {
        Expr::This => Some(Track::This),
        Expr::Local(s) => Some(Track::Local(*s)),
        Expr::Field(target, f) if matches!(**target, Expr::This) => Some(Track::Field(f.clone())),
        _ => None,
    }
}

/// Calls in evaluation order: receiver, then arguments, then the call itself.
fn expr_events(e: &Expr, out: &mut Vec<(Track, String)>) {
    match e {
        Expr::Call {
            receiver,
            method,
            args,
        } => {
            expr_events(receiver, out);
            for a in args {
                expr_events(a, out);
            }
            if let Some(t) = track_of(receiver) {
                out.push((t, method.clone()));
            }
        }
        Expr::New { args, .. } => args.iter().for_each(|a| expr_events(a, out)),
        Expr::Field(target, _) | Expr::Unary(_, target) => expr_events(target, out),
        Expr::Binary(_, l, r) => {
            expr_events(l, out);
            expr_events(r, out);
        }
        Expr::Lit(_) | Expr::This | Expr::Local(_) | Expr::Name(_) => {}
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::sutlang::{execute_test, parse_program, parse_tests, SourceFile, DEFAULT_STEP_LIMIT};

    fn sequences(src: &str, class: &str) -> BTreeSet<Vec<String>> {
        let p = parse_program(&[SourceFile::new("t.sut", src)]).unwrap();
        collect_static_sequences(&p)
            .sequences
            .get(class)
            .map(|s| s.iter().map(|c| c.actions.clone()).collect())
            .unwrap_or_default()
    }

    fn set(items: &[&[&str]]) -> BTreeSet<Vec<String>> {
        items
            .iter()
            .map(|s| s.iter().map(|a| a.to_string()).collect())
            .collect()
    }

    const LEAF: &str = "class L { def m() { } def n() { } def p() { } def q() { } }\n";

    #[test]
    fn branches_give_two_sequences() {
        let src = format!("{LEAF}class D {{ def go(L a, bool c) {{ a.m(); if (c) {{ a.n(); }} else {{ a.p(); }} }} }}");
        assert_eq!(sequences(&src, "L"), set(&[&["m", "n"], &["m", "p"]]));
    }

    #[test]
    fn loop_body_once_and_empty_iteration_adds_nothing() {
        let src = format!("{LEAF}class D {{ def go(L a, bool c) {{ while (c) {{ a.m(); }} }} }}");
        assert_eq!(sequences(&src, "L"), set(&[&["m"]]));
    }

    #[test]
    fn callee_internals_are_not_followed() {
        let src = format!(
            "{LEAF}class D {{ def go(L a) {{ let b = this.helper(a); }} def helper(L x): int {{ x.q(); return 1; }} }}"
        );
        // `q` only shows up as helper's own sequence on its parameter.
        let seqs = sequences(&src, "L");
        assert_eq!(seqs, set(&[&["q"]]));
        let d = sequences(&src, "D");
        assert_eq!(d, set(&[&["helper"]]));
    }

    #[test]
    fn constructions_locals_and_fields() {
        let src = format!(
            "{LEAF}class D {{ field f: L; def go() {{ let a = new L(); a.m(); this.f = new L(); this.f.n(); let b = a; b.p(); }} }}"
        );
        assert_eq!(
            sequences(&src, "L"),
            set(&[&["<init>/0", "m"], &["<init>/0", "n"], &["p"]])
        );
    }

    #[test]
    fn returns_end_paths() {
        let src = format!("{LEAF}class D {{ def go(L a, bool c) {{ if (c) {{ a.m(); return; }} a.n(); }} }}");
        assert_eq!(sequences(&src, "L"), set(&[&["m"], &["n"]]));
    }

    #[test]
    fn path_cap_truncates_with_flag() {
        let mut body = String::new();
        for i in 0..10 {
            body.push_str(&format!("if (c{i}) {{ a.m(); }} else {{ a.n(); }}\n"));
        }
        let params: Vec<String> = (0..10).map(|i| format!("bool c{i}")).collect();
        let src = format!("{LEAF}class D {{ def go(L a, {}) {{ {body} }} }}", params.join(", "));
        let p = parse_program(&[SourceFile::new("t.sut", &src)]).unwrap();
        let r = collect_static_sequences(&p);
        assert_eq!(r.truncated, vec!["D.go/11".to_string()]);
        assert_eq!(r.sequences["L"].len(), MAX_PATHS_PER_METHOD);
    }

    /// Every static path of a loop-free driver is the call order some
    /// concrete execution of that driver produces.
    #[test]
    fn static_sequences_are_realizable() {
        let src = format!(
            "{LEAF}class D {{
  def go(bool c1, bool c2, bool c3) {{
    let a = new L();
    if (c1) {{ a.m(); if (c2) {{ a.n(); }} }} else {{ a.p(); }}
    if (c3) {{ a.q(); }} else {{ a.m(); a.m(); }}
  }}
}}"
        );
        let p = parse_program(&[SourceFile::new("t.sut", &src)]).unwrap();
        let statics: BTreeSet<Vec<String>> = collect_static_sequences(&p).sequences["L"]
            .iter()
            .map(|s| s.actions.clone())
            .collect();
        let mut dynamics = BTreeSet::new();
        for bits in 0..8u32 {
            let flag = |i: u32| bits & (1 << i) != 0;
            let text = format!("test t {{ d = new D(); d.go({}, {}, {}); }}", flag(0), flag(1), flag(2));
            let t = &parse_tests("t", &text).unwrap()[0];
            let r = execute_test(&p, t, DEFAULT_STEP_LIMIT);
            assert!(r.thrown.is_none());
            let seq: Vec<String> = r
                .call_events
                .iter()
                .filter(|e| &*e.class == "L")
                .map(|e| e.action())
                .collect();
            dynamics.insert(seq);
        }
        assert_eq!(statics, dynamics);
    }
}
