//! Test cases: straight-line statement lists driving the program, plus the
//! `.sut-test` text format.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::{Expr, Kind, Literal, CONSTRUCTOR};
use super::lexer::{tokenize, Tok};
use super::parser::Parser;
use super::SutError;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arg {
    Var(String),
    Lit(Literal),
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Var(v) => f.write_str(v),
            Arg::Lit(l) => write!(f, "{l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    /// `v = new C(args);`
    Construct {
        var: String,
        class: String,
        args: Vec<Arg>,
    },
    /// `v = literal;`
    Literal { var: String, value: Literal },
    /// `[r =] recv.m(args);`
    Call {
        result: Option<String>,
        receiver: String,
        method: String,
        args: Vec<Arg>,
    },
    /// `assert expr;` only appears in hand-written tests.
    Assert { expr: Expr },
}

impl Statement {
    /// Variable introduced by this statement, if any.
    pub fn defines(&self) -> Option<&str> {
        match self {
            Statement::Construct { var, .. } | Statement::Literal { var, .. } => Some(var),
            Statement::Call {
                result: Some(r), ..
            } => Some(r),
            _ => None,
        }
    }

    /// Variables read by this statement, receiver first.
    pub fn uses(&self) -> Vec<&str> {
        fn arg_vars(args: &[Arg]) -> impl Iterator<Item = &str> {
            args.iter().filter_map(|a| match a {
                Arg::Var(v) => Some(v.as_str()),
                Arg::Lit(_) => None,
            })
        }
        match self {
            Statement::Construct { args, .. } => arg_vars(args).collect(),
            Statement::Literal { .. } => Vec::new(),
            Statement::Call { receiver, args, .. } => std::iter::once(receiver.as_str())
                .chain(arg_vars(args))
                .collect(),
            Statement::Assert { expr } => {
                fn names<'a>(e: &'a Expr, out: &mut Vec<&'a str>) {
                    match e {
                        Expr::Name(n) => out.push(n),
                        Expr::Field(e, _) | Expr::Unary(_, e) => names(e, out),
                        Expr::Call { receiver, args, .. } => {
                            names(receiver, out);
                            args.iter().for_each(|a| names(a, out));
                        }
                        Expr::New { args, .. } => args.iter().for_each(|a| names(a, out)),
                        Expr::Binary(_, l, r) => {
                            names(l, out);
                            names(r, out);
                        }
                        _ => {}
                    }
                }
                let mut out = Vec::new();
                names(expr, &mut out);
                out
            }
        }
    }

    pub fn rename(&mut self, from: &str, to: &str) {
        let fix = |s: &mut String| {
            if s == from {
                *s = to.to_string();
            }
        };
        let fix_args = |args: &mut Vec<Arg>| {
            for a in args.iter_mut() {
                if let Arg::Var(v) = a {
                    if v == from {
                        *v = to.to_string();
                    }
                }
            }
        };
        match self {
            Statement::Construct { var, args, .. } => {
                fix(var);
                fix_args(args);
            }
            Statement::Literal { var, .. } => fix(var),
            Statement::Call {
                result,
                receiver,
                args,
                ..
            } => {
                if let Some(r) = result {
                    fix(r);
                }
                fix(receiver);
                fix_args(args);
            }
            Statement::Assert { expr } => {
                fn walk(e: &mut Expr, from: &str, to: &str) {
                    match e {
                        Expr::Name(n) if n == from => *n = to.to_string(),
                        Expr::Field(e, _) | Expr::Unary(_, e) => walk(e, from, to),
                        Expr::Call { receiver, args, .. } => {
                            walk(receiver, from, to);
                            args.iter_mut().for_each(|a| walk(a, from, to));
                        }
                        Expr::New { args, .. } => args.iter_mut().for_each(|a| walk(a, from, to)),
                        Expr::Binary(_, l, r) => {
                            walk(l, from, to);
                            walk(r, from, to);
                        }
                        _ => {}
                    }
                }
                walk(expr, from, to)
            }
        }
    }

    pub fn is_assert(&self) -> bool {
        matches!(self, Statement::Assert { .. })
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args = |f: &mut fmt::Formatter<'_>, args: &[Arg]| -> fmt::Result {
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            Ok(())
        };
        match self {
            Statement::Construct {
                var,
                class,
                args: a,
            } => {
                write!(f, "{var} = new {class}(")?;
                args(f, a)?;
                f.write_str(");")
            }
            Statement::Literal { var, value } => write!(f, "{var} = {value};"),
            Statement::Call {
                result,
                receiver,
                method,
                args: a,
            } => {
                if let Some(r) = result {
                    write!(f, "{r} = ")?;
                }
                write!(f, "{receiver}.{method}(")?;
                args(f, a)?;
                f.write_str(");")
            }
            Statement::Assert { expr } => write!(f, "assert {expr};"),
        }
    }
}

/// Statically known kind of a test variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarKind {
    Value(Kind),
    Null,
    /// Result of a call; not tracked.
    Unknown,
}

impl VarKind {
    pub fn class_name(&self) -> Option<&str> {
        match self {
            VarKind::Value(k) => k.class_name(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub name: String,
    pub statements: Vec<Statement>,
}

impl TestCase {
    pub fn new(name: impl Into<String>, statements: Vec<Statement>) -> Self {
        Self {
            name: name.into(),
            statements,
        }
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    /// Kind of every variable as of the end of the test.
    pub fn var_kinds(&self) -> BTreeMap<String, VarKind> {
        let mut kinds = BTreeMap::new();
        for s in &self.statements {
            match s {
                Statement::Construct { var, class, .. } => {
                    kinds.insert(var.clone(), VarKind::Value(Kind::Class(class.clone())));
                }
                Statement::Literal { var, value } => {
                    let k = match value {
                        Literal::Int(_) => VarKind::Value(Kind::Int),
                        Literal::Bool(_) => VarKind::Value(Kind::Bool),
                        Literal::Str(_) => VarKind::Value(Kind::Str),
                        Literal::Null => VarKind::Null,
                    };
                    kinds.insert(var.clone(), k);
                }
                Statement::Call {
                    result: Some(r), ..
                } => {
                    kinds.insert(r.clone(), VarKind::Unknown);
                }
                _ => {}
            }
        }
        kinds
    }

    /// Kind of each variable at the point statement `index` executes.
    pub fn var_kinds_before(&self, index: usize) -> BTreeMap<String, VarKind> {
        TestCase {
            name: String::new(),
            statements: self.statements[..index.min(self.len())].to_vec(),
        }
        .var_kinds()
    }

    pub fn var_names(&self) -> BTreeSet<String> {
        self.statements
            .iter()
            .filter_map(|s| s.defines().map(str::to_string))
            .collect()
    }

    /// A variable name not used anywhere in the test.
    pub fn fresh_var(&self) -> String {
        let names = self.var_names();
        let mut used: BTreeSet<&str> = names.iter().map(String::as_str).collect();
        for s in &self.statements {
            used.extend(s.uses());
        }
        (0..)
            .map(|i| format!("v{i}"))
            .find(|n| !used.contains(n.as_str()))
            .expect("unbounded")
    }

    /// Classes named by constructions or by calls on variables of known class.
    pub fn referenced_classes(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut kinds: BTreeMap<&str, &str> = BTreeMap::new();
        for s in &self.statements {
            match s {
                Statement::Construct { var, class, .. } => {
                    out.insert(class.clone());
                    kinds.insert(var, class);
                }
                Statement::Call { receiver, .. } => {
                    if let Some(c) = kinds.get(receiver.as_str()) {
                        out.insert(c.to_string());
                    }
                }
                _ => {}
            }
        }
        out
    }

    /// Indices of calls to `class.method` (constructions when `method` is `<init>`).
    pub fn calls_to(&self, class: &str, method: &str) -> Vec<usize> {
        let mut kinds: BTreeMap<&str, &str> = BTreeMap::new();
        let mut out = Vec::new();
        for (i, s) in self.statements.iter().enumerate() {
            match s {
                Statement::Construct { var, class: c, .. } => {
                    if method == CONSTRUCTOR && c == class {
                        out.push(i);
                    }
                    kinds.insert(var, c);
                }
                Statement::Call {
                    receiver,
                    method: m,
                    result,
                    ..
                } => {
                    if m == method && kinds.get(receiver.as_str()) == Some(&class) {
                        out.push(i);
                    }
                    if let Some(r) = result {
                        kinds.remove(r.as_str());
                    }
                }
                Statement::Literal { var, .. } => {
                    kinds.remove(var.as_str());
                }
                Statement::Assert { .. } => {}
            }
        }
        out
    }

    /// Test with assertions removed.
    pub fn without_assertions(&self) -> TestCase {
        TestCase {
            name: self.name.clone(),
            statements: self
                .statements
                .iter()
                .filter(|s| !s.is_assert())
                .cloned()
                .collect(),
        }
    }

    /// Every used variable is defined by an earlier statement.
    pub fn is_well_formed(&self) -> bool {
        let mut defined = BTreeSet::new();
        for s in &self.statements {
            if s.uses().iter().any(|u| !defined.contains(*u)) {
                return false;
            }
            if let Some(d) = s.defines() {
                defined.insert(d);
            }
        }
        true
    }
}

impl fmt::Display for TestCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "test {} {{", self.name)?;
        for s in &self.statements {
            writeln!(f, "  {s}")?;
        }
        writeln!(f, "}}")
    }
}

/// Statements that build one object, held in `object_var` at the end.
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub class: String,
    pub object_var: String,
    pub statements: Vec<Statement>,
}

impl Fragment {
    pub fn as_test(&self, name: &str) -> TestCase {
        TestCase::new(name, self.statements.clone())
    }

    /// Copy of the fragment whose variables avoid every name in `taken`.
    /// Returns the statements and the renamed object variable.
    pub fn instantiate(&self, taken: &BTreeSet<String>) -> (Vec<Statement>, String) {
        let mut statements = self.statements.clone();
        let mut object_var = self.object_var.clone();
        let mut used: BTreeSet<String> = taken.clone();
        let mut next = 0usize;
        let defined: Vec<String> = self
            .statements
            .iter()
            .filter_map(|s| s.defines().map(str::to_string))
            .collect();
        for old in defined {
            let new = loop {
                let candidate = format!("v{next}");
                next += 1;
                if !used.contains(&candidate) && !defined_in(&self.statements, &candidate) {
                    break candidate;
                }
            };
            for s in &mut statements {
                s.rename(&old, &new);
            }
            if object_var == old {
                object_var = new.clone();
            }
            used.insert(new);
        }
        (statements, object_var)
    }
}

fn defined_in(statements: &[Statement], name: &str) -> bool {
    statements.iter().any(|s| s.defines() == Some(name) || s.uses().contains(&name))
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.statements {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Parses a `.sut-test` file holding one or more `test name { ... }` blocks.
pub fn parse_tests(file: &str, text: &str) -> Result<Vec<TestCase>, SutError> {
    let mut p = Parser::new(file, tokenize(file, text)?);
    let mut tests = Vec::new();
    while !p.at(&Tok::Eof) {
        p.expect_keyword("test")?;
        let name = p.ident()?;
        p.expect(Tok::LBrace)?;
        let mut statements = Vec::new();
        while !p.at(&Tok::RBrace) {
            statements.push(test_statement(&mut p)?);
        }
        p.expect(Tok::RBrace)?;
        tests.push(TestCase { name, statements });
    }
    Ok(tests)
}

fn test_statement(p: &mut Parser<'_>) -> Result<Statement, SutError> {
    if p.at_keyword("assert") {
        p.bump();
        let expr = p.harness_expr()?;
        p.expect(Tok::Semi)?;
        return Ok(Statement::Assert { expr });
    }
    let result = if p.at_binding() {
        let var = p.ident()?;
        p.expect(Tok::Assign)?;
        Some(var)
    } else {
        None
    };
    if p.at_keyword("new") {
        let var = result.ok_or_else(|| p.error("construction must be bound to a variable"))?;
        p.bump();
        let class = p.ident()?;
        let args = test_args(p)?;
        p.expect(Tok::Semi)?;
        return Ok(Statement::Construct { var, class, args });
    }
    if let Some(value) = literal(p)? {
        let var = result.ok_or_else(|| p.error("literal must be bound to a variable"))?;
        p.expect(Tok::Semi)?;
        return Ok(Statement::Literal { var, value });
    }
    let receiver = p.ident()?;
    p.expect(Tok::Dot)?;
    let method = p.ident()?;
    let args = test_args(p)?;
    p.expect(Tok::Semi)?;
    Ok(Statement::Call {
        result,
        receiver,
        method,
        args,
    })
}

fn literal(p: &mut Parser<'_>) -> Result<Option<Literal>, SutError> {
    Ok(Some(match p.peek().clone() {
        Tok::Int(v) => {
            p.bump();
            Literal::Int(v)
        }
        Tok::Minus => {
            p.bump();
            match p.bump() {
                Tok::Int(v) => Literal::Int(-v),
                other => return Err(p.error(format!("expected integer after '-', found {other:?}"))),
            }
        }
        Tok::Str(s) => {
            p.bump();
            Literal::Str(s)
        }
        Tok::Ident(w) if w == "true" || w == "false" => {
            p.bump();
            Literal::Bool(w == "true")
        }
        Tok::Ident(w) if w == "null" => {
            p.bump();
            Literal::Null
        }
        _ => return Ok(None),
    }))
}

fn test_args(p: &mut Parser<'_>) -> Result<Vec<Arg>, SutError> {
    p.expect(Tok::LParen)?;
    let mut args = Vec::new();
    if !p.at(&Tok::RParen) {
        loop {
            match literal(p)? {
                Some(l) => args.push(Arg::Lit(l)),
                None => args.push(Arg::Var(p.ident()?)),
            }
            if !p.eat(&Tok::Comma) {
                break;
            }
        }
    }
    p.expect(Tok::RParen)?;
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
test first {
  a = new Stack(3);
  n = -7;
  a.push(n, "x", null, true);
  r = a.pop();
  assert r == -7 && a.size() == 0;
}
test second {
  s = "hi";
}
"#;

    #[test]
    fn parses_all_statement_forms() {
        let tests = parse_tests("t.sut-test", SAMPLE).unwrap();
        assert_eq!(tests.len(), 2);
        let t = &tests[0];
        assert_eq!(t.name, "first");
        assert_eq!(t.len(), 5);
        assert!(matches!(&t.statements[0], Statement::Construct { class, args, .. }
            if class == "Stack" && args == &vec![Arg::Lit(Literal::Int(3))]));
        assert!(matches!(&t.statements[3], Statement::Call { result: Some(r), .. } if r == "r"));
        assert!(t.statements[4].is_assert());
        assert_eq!(t.without_assertions().len(), 4);
    }

    #[test]
    fn display_parses_back() {
        let tests = parse_tests("t.sut-test", SAMPLE).unwrap();
        for t in &tests {
            let again = parse_tests("again", &t.to_string()).unwrap();
            assert_eq!(&again[0], t);
        }
    }

    #[test]
    fn target_call_lookup_uses_receiver_class() {
        let t = &parse_tests("t", SAMPLE).unwrap()[0];
        assert_eq!(t.calls_to("Stack", "pop"), vec![3]);
        assert_eq!(t.calls_to("Stack", "<init>"), vec![0]);
        assert!(t.calls_to("Queue", "pop").is_empty());
        assert_eq!(t.referenced_classes().into_iter().collect::<Vec<_>>(), vec!["Stack"]);
    }

    #[test]
    fn well_formedness_and_fresh_names() {
        let t = &parse_tests("t", SAMPLE).unwrap()[0];
        assert!(t.is_well_formed());
        let mut broken = t.clone();
        broken.statements.remove(0);
        assert!(!broken.is_well_formed());
        assert_eq!(t.fresh_var(), "v0");
    }

    #[test]
    fn unbound_construction_rejected() {
        assert!(parse_tests("t", "test x { new A(); }").is_err());
    }
    #[test]
    fn fragment_instantiation_avoids_taken_names() {
        let t = &parse_tests("t", "test f { v1 = new A(); v0 = new B(v1); v0.go(v1); }").unwrap()[0];
        let frag = Fragment {
            class: "B".into(),
            object_var: "v0".into(),
            statements: t.statements.clone(),
        };
        let taken: BTreeSet<String> = ["v2".to_string()].into();
        let (stmts, var) = frag.instantiate(&taken);
        let out = TestCase::new("x", stmts);
        assert!(out.is_well_formed());
        assert!(!out.var_names().contains("v2"));
        assert!(!out.var_names().contains("v0") && !out.var_names().contains("v1"));
        assert_eq!(out.var_kinds()[&var], VarKind::Value(Kind::Class("B".into())));
    }
}
