//! Guided initialization, crossover and mutation. Every test these produce
//! calls the target method (or constructs the target class).

use std::collections::BTreeSet;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{CrashTarget, SearchConfig};
use crate::seeding::{random_literal, random_object, ObjectPool};
use crate::sutlang::ast::{Kind, MethodDef};
use crate::sutlang::{Arg, Literal, Program, Statement, TestCase, VarKind, CONSTRUCTOR};

/// Construction attempts per initial individual before giving up on it.
pub const INIT_ATTEMPTS: usize = 50;
/// Chance that an object-typed argument is `null`.
const NULL_PROBABILITY: f64 = 0.1;
/// Chance of reusing an existing object when one of the right class exists.
const REUSE_PROBABILITY: f64 = 0.5;
/// Random calls made on a randomly constructed object.
const MAX_RANDOM_CALLS: usize = 2;

pub const GENERATED_TEST_NAME: &str = "generated";

/// How often the seeding material was actually used.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedingUsage {
    /// Initial individuals whose target-call receiver came from the pool.
    pub receivers_from_pool: usize,
    /// Pool objects drawn while building initial individuals.
    pub init_pool_draws: usize,
    /// Pool objects drawn by crossover repair and mutation.
    pub mutation_pool_draws: usize,
    pub clones_used: usize,
}

/// Everything a search run reads.
#[derive(Debug, Clone, Copy)]
pub struct SearchContext<'a> {
    pub program: &'a Program,
    pub target: &'a CrashTarget,
    pub pool: &'a ObjectPool,
    pub clones: &'a [TestCase],
    pub config: &'a SearchConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Init,
    Mutation,
}

struct Obtained {
    var: String,
    /// Index just past the statements inserted for the object.
    pos: usize,
    from_pool: bool,
}

pub struct Operators<'a> {
    ctx: SearchContext<'a>,
    pub usage: SeedingUsage,
    /// Members whose call counts as the target call.
    target_members: Vec<&'a MethodDef>,
    target_names: BTreeSet<String>,
    /// Classes an object can be created for.
    object_classes: Vec<String>,
}

fn taken_names(test: &TestCase) -> BTreeSet<String> {
    let mut out = test.var_names();
    for s in &test.statements {
        out.extend(s.uses().into_iter().map(str::to_string));
    }
    out
}

fn fresh_name(taken: &BTreeSet<String>) -> String {
    (0..)
        .map(|i| format!("v{i}"))
        .find(|n| !taken.contains(n))
        .expect("unbounded")
}

/// Drops every statement that reads a variable not defined before it.
pub fn make_well_formed(test: &mut TestCase) {
    let mut defined: BTreeSet<String> = BTreeSet::new();
    test.statements.retain(|s| {
        if s.uses().iter().any(|u| !defined.contains(*u)) {
            return false;
        }
        if let Some(d) = s.defines() {
            defined.insert(d.to_string());
        }
        true
    });
}

impl<'a> Operators<'a> {
    pub fn new(ctx: SearchContext<'a>) -> Self {
        let target = ctx.target;
        let class = ctx.program.class(&target.class);
        let target_members: Vec<&MethodDef> = match class {
            None => Vec::new(),
            Some(c) if target.is_constructor() => c.public_constructors().collect(),
            Some(c) => {
                let named: Vec<&MethodDef> = c.methods_named(&target.method).filter(|m| !m.private).collect();
                if named.is_empty() {
                    // private target: any public entry point of the class may reach it
                    c.public_methods().collect()
                } else {
                    named
                }
            }
        };
        let target_names = target_members.iter().map(|m| m.name.to_string()).collect();
        let mut object_classes: BTreeSet<String> = ctx
            .program
            .classes()
            .filter(|c| c.public_constructors().next().is_some())
            .map(|c| c.name.to_string())
            .collect();
        object_classes.extend(ctx.pool.classes().map(str::to_string));
        Self {
            ctx,
            usage: SeedingUsage::default(),
            target_members,
            target_names,
            object_classes: object_classes.into_iter().collect(),
        }
    }

    fn config(&self) -> &SearchConfig {
        self.ctx.config
    }

    fn pool_probability(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Init => self.config().seeding.pick_init,
            Phase::Mutation => self.config().seeding.pick_mut,
        }
    }

    pub fn target_call_indices(&self, test: &TestCase) -> Vec<usize> {
        let target = self.ctx.target;
        if target.is_constructor() {
            return test.calls_to(&target.class, CONSTRUCTOR);
        }
        let mut out: Vec<usize> = self
            .target_names
            .iter()
            .flat_map(|m| test.calls_to(&target.class, m))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn has_target_call(&self, test: &TestCase) -> bool {
        !self.target_call_indices(test).is_empty()
    }

    fn object_vars_before(test: &TestCase, pos: usize, class: Option<&str>) -> Vec<(String, String)> {
        test.var_kinds_before(pos)
            .into_iter()
            .filter_map(|(v, k)| match k {
                VarKind::Value(Kind::Class(c)) if class.map_or(true, |want| want == c) => Some((v, c)),
                _ => None,
            })
            .collect()
    }

    fn splice(test: &mut TestCase, pos: usize, statements: Vec<Statement>) -> usize {
        let n = statements.len();
        test.statements.splice(pos..pos, statements);
        pos + n
    }

    /// An object of `class` defined before the returned position: reused,
    /// drawn from the pool, or built at random.
    fn obtain_object<R: Rng + ?Sized>(
        &mut self,
        test: &mut TestCase,
        pos: usize,
        class: &str,
        phase: Phase,
        reuse: bool,
        rng: &mut R,
    ) -> Option<Obtained> {
        if reuse {
            let existing = Self::object_vars_before(test, pos, Some(class));
            if !existing.is_empty() && rng.gen_bool(REUSE_PROBABILITY) {
                let (var, _) = existing.choose(rng).expect("non-empty").clone();
                return Some(Obtained {
                    var,
                    pos,
                    from_pool: false,
                });
            }
        }
        let pool = self.ctx.pool;
        if pool.has(class) && rng.gen_bool(self.pool_probability(phase)) {
            let entry = pool.draw(class, rng).expect("class has entries");
            match phase {
                Phase::Init => self.usage.init_pool_draws += 1,
                Phase::Mutation => self.usage.mutation_pool_draws += 1,
            }
            let (statements, var) = entry.fragment.instantiate(&taken_names(test));
            let pos = Self::splice(test, pos, statements);
            return Some(Obtained {
                var,
                pos,
                from_pool: true,
            });
        }
        let fragment = random_object(self.ctx.program, class, MAX_RANDOM_CALLS, NULL_PROBABILITY, rng)?;
        let (statements, var) = fragment.instantiate(&taken_names(test));
        let pos = Self::splice(test, pos, statements);
        Some(Obtained {
            var,
            pos,
            from_pool: false,
        })
    }

    /// Arguments for `m` at `pos`; objects they need are inserted first.
    fn args_for<R: Rng + ?Sized>(
        &mut self,
        test: &mut TestCase,
        mut pos: usize,
        m: &MethodDef,
        phase: Phase,
        rng: &mut R,
    ) -> (Vec<Arg>, usize) {
        let mut args = Vec::with_capacity(m.params.len());
        for p in &m.params {
            let arg = match &p.kind {
                Kind::Class(c) => {
                    if rng.gen_bool(NULL_PROBABILITY) {
                        Arg::Lit(Literal::Null)
                    } else {
                        match self.obtain_object(test, pos, c, phase, true, rng) {
                            Some(o) => {
                                pos = o.pos;
                                Arg::Var(o.var)
                            }
                            None => Arg::Lit(Literal::Null),
                        }
                    }
                }
                k => Arg::Lit(random_literal(k, rng)),
            };
            args.push(arg);
        }
        (args, pos)
    }

    /// Appends a call of a target member on `receiver`.
    fn call_target_on<R: Rng + ?Sized>(&mut self, test: &mut TestCase, receiver: &str, phase: Phase, rng: &mut R) -> bool {
        let Some(&m) = self.target_members.choose(rng) else {
            return false;
        };
        let pos = test.len();
        let (args, pos) = self.args_for(test, pos, m, phase, rng);
        test.statements.insert(
            pos,
            Statement::Call {
                result: None,
                receiver: receiver.to_string(),
                method: m.name.to_string(),
                args,
            },
        );
        true
    }

    fn construct_target<R: Rng + ?Sized>(&mut self, test: &mut TestCase, phase: Phase, rng: &mut R) -> bool {
        let Some(&ctor) = self.target_members.choose(rng) else {
            return false;
        };
        let pos = test.len();
        let (args, pos) = self.args_for(test, pos, ctor, phase, rng);
        let var = fresh_name(&taken_names(test));
        test.statements.insert(
            pos,
            Statement::Construct {
                var,
                class: self.ctx.target.class.clone(),
                args,
            },
        );
        true
    }

    /// Appends a target call, reusing or creating a receiver.
    fn inject_target_call<R: Rng + ?Sized>(&mut self, test: &mut TestCase, phase: Phase, rng: &mut R) -> bool {
        if self.ctx.target.is_constructor() {
            return self.construct_target(test, phase, rng);
        }
        let class = self.ctx.target.class.clone();
        let pos = test.len();
        match self.obtain_object(test, pos, &class, phase, true, rng) {
            Some(o) => self.call_target_on(test, &o.var, phase, rng),
            None => false,
        }
    }

    fn ensure_target_call<R: Rng + ?Sized>(&mut self, test: &mut TestCase, phase: Phase, rng: &mut R) -> bool {
        self.has_target_call(test) || self.inject_target_call(test, phase, rng)
    }

    /// Inserts one random statement at `pos`: a call on an existing object
    /// or a new object.
    fn insert_random_statement<R: Rng + ?Sized>(&mut self, test: &mut TestCase, pos: usize, phase: Phase, rng: &mut R) {
        let objects = Self::object_vars_before(test, pos, None);
        if !objects.is_empty() && rng.gen_bool(0.5) {
            let (var, class) = objects.choose(rng).expect("non-empty").clone();
            let program = self.ctx.program;
            let Some(m) = program.class(&class).and_then(|c| c.public_methods().choose(rng)) else {
                return;
            };
            let (args, pos) = self.args_for(test, pos, m, phase, rng);
            test.statements.insert(
                pos,
                Statement::Call {
                    result: None,
                    receiver: var,
                    method: m.name.to_string(),
                    args,
                },
            );
            return;
        }
        let class = if rng.gen_bool(0.5) {
            self.ctx.target.class.clone()
        } else {
            match self.object_classes.choose(rng) {
                Some(c) => c.clone(),
                None => return,
            }
        };
        self.obtain_object(test, pos, &class, phase, false, rng);
    }

    /// A new individual: a mutated clone, or a random test ending with a
    /// target call. `None` when no target call could be built.
    pub fn initial_individual<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<TestCase> {
        let clones = self.ctx.clones;
        if !clones.is_empty() && rng.gen_bool(self.config().seeding.clone) {
            let mut test = clones.choose(rng).expect("non-empty").clone();
            test.name = GENERATED_TEST_NAME.to_string();
            self.usage.clones_used += 1;
            self.mutate_in_place(&mut test, rng);
            if !self.ensure_target_call(&mut test, Phase::Init, rng) {
                return None;
            }
            self.truncate(&mut test);
            return Some(test);
        }
        let mut test = TestCase::new(GENERATED_TEST_NAME, Vec::new());
        let max_len = (self.config().max_test_length / 2).max(1);
        let statements = rng.gen_range(1..=max_len);
        let receiver = if self.ctx.target.is_constructor() {
            None
        } else {
            let class = self.ctx.target.class.clone();
            let o = self.obtain_object(&mut test, 0, &class, Phase::Init, false, rng)?;
            if o.from_pool {
                self.usage.receivers_from_pool += 1;
            }
            Some(o.var)
        };
        for _ in 1..statements {
            let end = test.len();
            self.insert_random_statement(&mut test, end, Phase::Init, rng);
        }
        let ok = match receiver {
            Some(r) => self.call_target_on(&mut test, &r, Phase::Init, rng),
            None => self.construct_target(&mut test, Phase::Init, rng),
        };
        if !ok {
            return None;
        }
        self.truncate(&mut test);
        Some(test)
    }

    /// Single-point crossover at the same relative position in both parents.
    pub fn crossover<R: Rng + ?Sized>(&mut self, a: &TestCase, b: &TestCase, rng: &mut R) -> (TestCase, TestCase) {
        let alpha: f64 = rng.gen();
        let c1 = self.splice_parents(a, b, alpha, rng).unwrap_or_else(|| a.clone());
        let c2 = self.splice_parents(b, a, alpha, rng).unwrap_or_else(|| b.clone());
        (c1, c2)
    }

    fn splice_parents<R: Rng + ?Sized>(
        &mut self,
        head: &TestCase,
        tail: &TestCase,
        alpha: f64,
        rng: &mut R,
    ) -> Option<TestCase> {
        let cut_head = (alpha * head.len() as f64).round() as usize;
        let cut_tail = (alpha * tail.len() as f64).round() as usize;
        let mut child = TestCase::new(head.name.clone(), head.statements[..cut_head].to_vec());
        let mut suffix: Vec<Statement> = tail.statements[cut_tail..].to_vec();
        let head_kinds = child.var_kinds();
        let tail_kinds = tail.var_kinds();

        // Names the suffix defines must not clash with the head's; names it
        // only reads keep their binding if the head has a variable of the
        // same name and kind.
        let mut taken = taken_names(&child);
        taken.extend(TestCase::new("", suffix.clone()).var_names());
        taken.extend(taken_names(tail));
        let suffix_defs: Vec<String> = suffix.iter().filter_map(|s| s.defines().map(str::to_string)).collect();
        let mut suffix_reads: BTreeSet<String> = BTreeSet::new();
        {
            let mut defined: BTreeSet<&str> = BTreeSet::new();
            for s in &suffix {
                for u in s.uses() {
                    if !defined.contains(u) {
                        suffix_reads.insert(u.to_string());
                    }
                }
                if let Some(d) = s.defines() {
                    defined.insert(d);
                }
            }
        }
        let rename = |name: &str, suffix: &mut Vec<Statement>, taken: &mut BTreeSet<String>| {
            let new = fresh_name(taken);
            taken.insert(new.clone());
            for s in suffix.iter_mut() {
                s.rename(name, &new);
            }
        };
        for d in &suffix_defs {
            if head_kinds.contains_key(d) {
                rename(d, &mut suffix, &mut taken);
            }
        }
        for r in &suffix_reads {
            if head_kinds.contains_key(r) && head_kinds.get(r) != tail_kinds.get(r) {
                rename(r, &mut suffix, &mut taken);
            }
        }

        // Declare whatever the suffix still reads without a definition.
        let mut renamed_kinds = tail_kinds.clone();
        for (i, s) in tail.statements[cut_tail..].iter().enumerate() {
            for (old, new) in s.uses().iter().zip(suffix[i].uses()) {
                if let Some(k) = tail_kinds.get(*old) {
                    renamed_kinds.insert(new.to_string(), k.clone());
                }
            }
        }
        let mut defined: BTreeSet<String> = child.var_names();
        let mut i = 0;
        while i < suffix.len() {
            let missing: Vec<String> = suffix[i]
                .uses()
                .into_iter()
                .filter(|u| !defined.contains(*u))
                .map(str::to_string)
                .collect();
            let mut keep = true;
            for var in missing {
                match renamed_kinds.get(&var) {
                    Some(VarKind::Value(Kind::Class(c))) => {
                        let c = c.clone();
                        let pos = child.len();
                        match self.obtain_object(&mut child, pos, &c, Phase::Mutation, true, rng) {
                            Some(o) => {
                                for s in suffix[i..].iter_mut() {
                                    s.rename(&var, &o.var);
                                }
                                defined.insert(o.var);
                            }
                            None => keep = false,
                        }
                    }
                    Some(VarKind::Value(k)) => {
                        child.statements.push(Statement::Literal {
                            var: var.clone(),
                            value: random_literal(k, rng),
                        });
                        defined.insert(var);
                    }
                    _ => keep = false,
                }
            }
            if keep {
                if let Some(d) = suffix[i].defines() {
                    defined.insert(d.to_string());
                }
                child.statements.push(suffix[i].clone());
            }
            i += 1;
        }
        make_well_formed(&mut child);
        if !self.ensure_target_call(&mut child, Phase::Mutation, rng) {
            return None;
        }
        self.truncate(&mut child);
        Some(child)
    }

    /// Per-statement deletion, change or insertion, then target-call repair.
    pub fn mutate<R: Rng + ?Sized>(&mut self, test: &TestCase, rng: &mut R) -> TestCase {
        let mut out = test.clone();
        self.mutate_in_place(&mut out, rng);
        if !self.ensure_target_call(&mut out, Phase::Mutation, rng) {
            return test.clone();
        }
        self.truncate(&mut out);
        out
    }

    fn mutate_in_place<R: Rng + ?Sized>(&mut self, test: &mut TestCase, rng: &mut R) {
        let len = test.len();
        if len == 0 {
            return;
        }
        let rate = self
            .config()
            .mutation_rate
            .unwrap_or(1.0 / len as f64)
            .clamp(0.0, 1.0);
        let mut ops: Vec<(usize, u8)> = Vec::new();
        for i in 0..len {
            if rng.gen_bool(rate) {
                ops.push((i, rng.gen_range(0..3u8)));
            }
        }
        for (i, op) in ops.into_iter().rev() {
            match op {
                0 => {
                    test.statements.remove(i);
                }
                1 => self.change_statement(test, i, rng),
                _ => self.insert_random_statement(test, i + 1, Phase::Mutation, rng),
            }
        }
        make_well_formed(test);
    }

    fn change_statement<R: Rng + ?Sized>(&mut self, test: &mut TestCase, i: usize, rng: &mut R) {
        let program = self.ctx.program;
        match test.statements[i].clone() {
            Statement::Literal { var, value } => {
                let kind = match value {
                    Literal::Int(_) => Kind::Int,
                    Literal::Bool(_) => Kind::Bool,
                    Literal::Str(_) => Kind::Str,
                    Literal::Null => return,
                };
                test.statements[i] = Statement::Literal {
                    var,
                    value: random_literal(&kind, rng),
                };
            }
            Statement::Construct { var, class, args } => {
                let Some(ctor) = program.class(&class).and_then(|c| c.constructor(args.len())) else {
                    return;
                };
                let (args, pos) = self.args_for(test, i, ctor, Phase::Mutation, rng);
                test.statements[pos] = Statement::Construct { var, class, args };
            }
            Statement::Call {
                result,
                receiver,
                method,
                args,
            } => {
                let kinds = test.var_kinds_before(i);
                let Some(class) = kinds.get(&receiver).and_then(|k| k.class_name()).map(str::to_string) else {
                    return;
                };
                let Some(m) = program.class(&class).and_then(|c| c.method(&method, args.len())) else {
                    return;
                };
                if rng.gen_bool(0.5) {
                    if let Some(o) = self.obtain_object(test, i, &class, Phase::Mutation, true, rng) {
                        test.statements[o.pos] = Statement::Call {
                            result,
                            receiver: o.var,
                            method,
                            args,
                        };
                    }
                } else {
                    let (args, pos) = self.args_for(test, i, m, Phase::Mutation, rng);
                    test.statements[pos] = Statement::Call {
                        result,
                        receiver,
                        method,
                        args,
                    };
                }
            }
            Statement::Assert { .. } => {}
        }
    }

    /// Shortens `test` to the length limit by dropping statements from the
    /// front, keeping the last target call and everything it depends on.
    pub fn truncate(&self, test: &mut TestCase) {
        let max = self.config().max_test_length;
        while test.len() > max {
            let Some(&t) = self.target_call_indices(test).last() else {
                test.statements.remove(0);
                make_well_formed(test);
                continue;
            };
            let mut needed: BTreeSet<String> = test.statements[t].uses().iter().map(|s| s.to_string()).collect();
            let mut definers = BTreeSet::from([t]);
            for j in (0..t).rev() {
                if let Some(d) = test.statements[j].defines() {
                    if needed.contains(d) {
                        definers.insert(j);
                        let uses: Vec<String> = test.statements[j].uses().iter().map(|s| s.to_string()).collect();
                        needed.extend(uses);
                    }
                }
            }
            let touches_needed = |s: &Statement| s.uses().first().is_some_and(|r| needed.contains(*r));
            let victim = (0..test.len())
                .find(|j| !definers.contains(j) && !touches_needed(&test.statements[*j]))
                .or_else(|| (0..test.len()).find(|j| !definers.contains(j)));
            let Some(v) = victim else { break };
            test.statements.remove(v);
            make_well_formed(test);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::Provenance;
    use crate::sutlang::{parse_program, parse_stack_trace, parse_tests, Fragment, SourceFile};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const SRC: &str = "\
class Stack {
  field size: int;
  def push(Item i) { this.size = this.size + 1; }
  def pop() {
    if (this.size == 0) {
      throw Empty();
    }
    this.size = this.size - 1;
  }
}
class Item {
  new(int w) { }
  def weigh(int g) { }
}
";

    struct Fixture {
        program: Program,
        target: CrashTarget,
        pool: ObjectPool,
    }

    fn fixture() -> Fixture {
        let program = parse_program(&[SourceFile::new("s.sut", SRC)]).unwrap();
        let target = CrashTarget::new(&program, parse_stack_trace("Empty\n\tat Stack.pop(s.sut:6)\n", 1).unwrap()).unwrap();
        let mut pool = ObjectPool::default();
        let carved = parse_tests("p", "test p { o0 = new Item(3); o1 = new Stack(); o1.push(o0); }").unwrap();
        pool.insert(
            Fragment {
                class: "Stack".into(),
                object_var: "o1".into(),
                statements: carved[0].statements.clone(),
            },
            Provenance::Carved,
        );
        Fixture { program, target, pool }
    }

    fn ops<'a>(f: &'a Fixture, config: &'a SearchConfig) -> Operators<'a> {
        Operators::new(SearchContext {
            program: &f.program,
            target: &f.target,
            pool: &f.pool,
            clones: &[],
            config,
        })
    }

    #[test]
    fn identical_parents_cross_to_themselves() {
        let f = fixture();
        let config = SearchConfig::default();
        let mut o = ops(&f, &config);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let parent = o.initial_individual(&mut rng).unwrap();
            let (a, b) = o.crossover(&parent, &parent, &mut rng);
            assert_eq!(a, parent);
            assert_eq!(b, parent);
        }
    }

    #[test]
    fn zero_rate_mutation_is_identity() {
        let f = fixture();
        let config = SearchConfig {
            mutation_rate: Some(0.0),
            ..Default::default()
        };
        let mut o = ops(&f, &config);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let t = o.initial_individual(&mut rng).unwrap();
            assert_eq!(o.mutate(&t, &mut rng), t);
        }
    }

    #[test]
    fn truncation_keeps_the_target_call_and_its_receiver() {
        let f = fixture();
        let config = SearchConfig {
            max_test_length: 3,
            ..Default::default()
        };
        let o = ops(&f, &config);
        let mut t = parse_tests(
            "t",
            "test t { a = new Item(1); b = new Item(2); s = new Stack(); a.weigh(1); s.push(b); s.pop(); }",
        )
        .unwrap()
        .remove(0);
        o.truncate(&mut t);
        assert_eq!(t.to_string(), "test t {\n  s = new Stack();\n  s.pop();\n}\n");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn offspring_keep_the_target_call(seed in any::<u64>(), max_len in 2usize..12) {
            let f = fixture();
            let config = SearchConfig {
                max_test_length: max_len,
                ..Default::default()
            };
            let mut o = ops(&f, &config);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = o.initial_individual(&mut rng).unwrap();
            let b = o.initial_individual(&mut rng).unwrap();
            let (c1, c2) = o.crossover(&a, &b, &mut rng);
            for t in [a, b, c1.clone(), c2, o.mutate(&c1, &mut rng)] {
                prop_assert!(o.has_target_call(&t));
                prop_assert!(t.is_well_formed(), "{}", t);
                prop_assert!(t.len() <= max_len);
            }
        }
    }
}
