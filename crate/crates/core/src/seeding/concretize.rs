//! Turning abstract behaviors into executable fragments, and building random
//! objects for the search.

use log::debug;
use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;
use thiserror::Error;

use super::AbstractObjectBehavior;
use crate::sutlang::ast::{parse_constructor_action, Kind, MethodDef};
use crate::sutlang::{execute_test, Arg, Fragment, Literal, Program, Statement, DEFAULT_STEP_LIMIT};

pub const INT_RANGE: std::ops::RangeInclusive<i64> = -100..=100;
pub const STRING_POOL: [&str; 16] = [
    "", "a", "b", "abc", "key", "value", "test", "null", "0", "-1", "hello world", "x y", "\\", "é", "long string value",
    "ZZ",
];
/// Nesting limit for objects built to serve as arguments; deeper ones are null.
pub const MAX_OBJECT_DEPTH: usize = 3;
pub const CONCRETIZE_ATTEMPTS: usize = 5;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConcretizeError {
    #[error("class {0} is not part of the program")]
    UnknownClass(String),
    #[error("class {0} has no public constructor")]
    NoConstructor(String),
    #[error("behavior for {class} failed replay after {attempts} attempts: {exception}")]
    Replay {
        class: String,
        attempts: usize,
        exception: String,
    },
}

pub fn random_literal<R: Rng + ?Sized>(kind: &Kind, rng: &mut R) -> Literal {
    match kind {
        Kind::Int => Literal::Int(rng.gen_range(INT_RANGE)),
        Kind::Bool => Literal::Bool(rng.gen()),
        Kind::Str => Literal::Str(STRING_POOL.choose(rng).expect("non-empty pool").to_string()),
        Kind::Class(_) => Literal::Null,
    }
}

/// Accumulates statements for one fragment, naming variables `o0`, `o1`, ...
pub struct FragmentBuilder<'p> {
    program: &'p Program,
    statements: Vec<Statement>,
    next_var: usize,
    /// Chance that an object-typed argument is plain `null`.
    pub null_probability: f64,
}

impl<'p> FragmentBuilder<'p> {
    pub fn new(program: &'p Program) -> Self {
        Self {
            program,
            statements: Vec::new(),
            next_var: 0,
            null_probability: 0.0,
        }
    }

    pub fn finish(self, class: &str, object_var: String) -> Fragment {
        Fragment {
            class: class.to_string(),
            object_var,
            statements: self.statements,
        }
    }

    fn fresh(&mut self) -> String {
        let v = format!("o{}", self.next_var);
        self.next_var += 1;
        v
    }

    /// Arguments for `m`; object parameters get nested constructions.
    pub fn args<R: Rng + ?Sized>(&mut self, m: &MethodDef, depth: usize, rng: &mut R) -> Vec<Arg> {
        m.params
            .iter()
            .map(|p| match &p.kind {
                Kind::Class(c) => {
                    if rng.gen_bool(self.null_probability) {
                        return Arg::Lit(Literal::Null);
                    }
                    match self.construct(c, None, depth + 1, rng) {
                        Some(v) => Arg::Var(v),
                        None => Arg::Lit(Literal::Null),
                    }
                }
                k => Arg::Lit(random_literal(k, rng)),
            })
            .collect()
    }

    /// Constructs an object of `class` with the constructor of the given
    /// arity if it is public, else a random public one. `None` when no public
    /// constructor exists or `depth` is beyond the nesting limit.
    pub fn construct<R: Rng + ?Sized>(
        &mut self,
        class: &str,
        arity: Option<usize>,
        depth: usize,
        rng: &mut R,
    ) -> Option<String> {
        if depth > MAX_OBJECT_DEPTH {
            return None;
        }
        let cdef = self.program.class(class)?;
        let ctor = arity
            .and_then(|k| cdef.constructor(k))
            .filter(|c| !c.private)
            .or_else(|| cdef.public_constructors().choose(rng))?;
        let args = self.args(ctor, depth, rng);
        let var = self.fresh();
        self.statements.push(Statement::Construct {
            var: var.clone(),
            class: class.to_string(),
            args,
        });
        Some(var)
    }

    /// Calls a public overload of `method` on `var`; false if there is none.
    pub fn call<R: Rng + ?Sized>(&mut self, var: &str, class: &str, method: &str, depth: usize, rng: &mut R) -> bool {
        let Some(cdef) = self.program.class(class) else {
            return false;
        };
        let Some(m) = cdef.methods_named(method).filter(|m| !m.private).choose(rng) else {
            return false;
        };
        self.call_method(var, m, depth, rng);
        true
    }

    pub fn call_method<R: Rng + ?Sized>(&mut self, var: &str, m: &MethodDef, depth: usize, rng: &mut R) {
        let args = self.args(m, depth, rng);
        self.statements.push(Statement::Call {
            result: None,
            receiver: var.to_string(),
            method: m.name.to_string(),
            args,
        });
    }
}

/// Random object of `class`: a public constructor followed by up to
/// `max_calls` random public method calls.
pub fn random_object<R: Rng + ?Sized>(
    program: &Program,
    class: &str,
    max_calls: usize,
    null_probability: f64,
    rng: &mut R,
) -> Option<Fragment> {
    let mut b = FragmentBuilder::new(program);
    b.null_probability = null_probability;
    let var = b.construct(class, None, 0, rng)?;
    let methods: Vec<&MethodDef> = program.class(class)?.public_methods().collect();
    if !methods.is_empty() {
        for _ in 0..rng.gen_range(0..=max_calls) {
            let m = methods.choose(rng).expect("non-empty");
            b.call_method(&var, m, 0, rng);
        }
    }
    Some(b.finish(class, var))
}

/// One concretization of `behavior`: its constructor if it starts with one
/// (else a random public constructor), then one call per remaining action
/// with random arguments. Constructors after the first action and actions
/// with no public method are skipped. Retried on unusable replays.
pub fn concretize<R: Rng + ?Sized>(
    behavior: &AbstractObjectBehavior,
    program: &Program,
    rng: &mut R,
) -> Result<Fragment, ConcretizeError> {
    let class = &behavior.class;
    let cdef = program
        .class(class)
        .ok_or_else(|| ConcretizeError::UnknownClass(class.clone()))?;
    if cdef.public_constructors().next().is_none() {
        return Err(ConcretizeError::NoConstructor(class.clone()));
    }
    let (own_ctor, rest) = match behavior.actions.split_first() {
        Some((first, rest)) if parse_constructor_action(first).is_some() => (parse_constructor_action(first), rest),
        _ => (None, &behavior.actions[..]),
    };
    let mut last_exception = String::new();
    for _ in 0..CONCRETIZE_ATTEMPTS {
        let mut b = FragmentBuilder::new(program);
        let var = b.construct(class, own_ctor, 0, rng).expect("public constructor exists");
        for action in rest {
            if parse_constructor_action(action).is_none() {
                b.call(&var, class, action, 0, rng);
            }
        }
        let fragment = b.finish(class, var);
        let replay = execute_test(program, &fragment.as_test("concretized"), DEFAULT_STEP_LIMIT);
        match replay.thrown {
            Some(t) if replay_unusable(&t.exception) => last_exception = t.exception,
            _ => return Ok(fragment),
        }
    }
    debug!("dropping behavior {:?} of {class}: {last_exception}", behavior.actions);
    Err(ConcretizeError::Replay {
        class: class.clone(),
        attempts: CONCRETIZE_ATTEMPTS,
        exception: last_exception,
    })
}

fn replay_unusable(exception: &str) -> bool {
    use crate::sutlang::interp::exceptions::*;
    exception == HARNESS_ERROR || exception == BUDGET_EXHAUSTED
}
