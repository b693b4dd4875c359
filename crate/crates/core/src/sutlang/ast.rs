//! Syntax tree of the mini-language used as the software under test.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Method name used for constructors in call events and stack frames.
pub const CONSTRUCTOR: &str = "<init>";

/// Class name of the pseudo-frame standing for the test driver.
pub const HARNESS_CLASS: &str = "TestHarness";

/// Action name of a constructor with the given arity (`<init>/2`).
pub fn constructor_action(arity: usize) -> String {
    format!("{CONSTRUCTOR}/{arity}")
}

/// Inverse of [`constructor_action`].
pub fn parse_constructor_action(action: &str) -> Option<usize> {
    action.strip_prefix("<init>/")?.parse().ok()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kind {
    Int,
    Bool,
    Str,
    Class(String),
}

impl Kind {
    pub fn class_name(&self) -> Option<&str> {
        match self {
            Kind::Class(name) => Some(name),
            _ => None,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Int => f.write_str("int"),
            Kind::Bool => f.write_str("bool"),
            Kind::Str => f.write_str("string"),
            Kind::Class(name) => f.write_str(name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Literal {
    Int(i64),
    Bool(bool),
    Str(String),
    Null,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(v) => write!(f, "{v}"),
            Literal::Bool(v) => write!(f, "{v}"),
            Literal::Str(s) => write_escaped(f, s),
            Literal::Null => f.write_str("null"),
        }
    }
}

fn write_escaped(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(Literal),
    This,
    /// Local variable or parameter slot of the enclosing method.
    Local(usize),
    /// Test-level variable; only produced when parsing `assert` expressions.
    Name(String),
    Field(Box<Expr>, String),
    Call {
        receiver: Box<Expr>,
        method: String,
        args: Vec<Expr>,
    },
    New {
        class: String,
        args: Vec<Expr>,
    },
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, args: &[Expr]) -> fmt::Result {
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            Ok(())
        }
        match self {
            Expr::Lit(l) => write!(f, "{l}"),
            Expr::This => f.write_str("this"),
            Expr::Local(slot) => write!(f, "${slot}"),
            Expr::Name(n) => f.write_str(n),
            Expr::Field(e, name) => write!(f, "{e}.{name}"),
            Expr::Call {
                receiver,
                method,
                args,
            } => {
                write!(f, "{receiver}.{method}(")?;
                list(f, args)?;
                f.write_str(")")
            }
            Expr::New { class, args } => {
                write!(f, "new {class}(")?;
                list(f, args)?;
                f.write_str(")")
            }
            Expr::Unary(UnOp::Neg, e) => write!(f, "-({e})"),
            Expr::Unary(UnOp::Not, e) => write!(f, "!({e})"),
            Expr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub line: u32,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    /// `let x = e;` and `x = e;` both assign a local slot.
    Assign { slot: usize, value: Expr },
    SetField {
        target: Expr,
        field: String,
        value: Expr,
    },
    Expr(Expr),
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    While { cond: Expr, body: Vec<Stmt> },
    Return(Option<Expr>),
    Throw {
        exception: String,
        message: Option<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub kind: Kind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalVar {
    pub name: String,
    /// Declared kind: parameter kind or `let x: K` annotation.
    pub declared: Option<Kind>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDef {
    pub name: String,
    pub kind: Kind,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodDef {
    /// `<init>` for constructors.
    pub name: Arc<str>,
    pub params: Vec<Param>,
    pub ret: Option<Kind>,
    /// Private members cannot be invoked from test code.
    pub private: bool,
    pub line: u32,
    pub body: Vec<Stmt>,
    /// Slot table, parameters first.
    pub locals: Vec<LocalVar>,
}

impl MethodDef {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn is_constructor(&self) -> bool {
        &*self.name == CONSTRUCTOR
    }

    /// Name used for this member in call sequences.
    pub fn action_name(&self) -> String {
        if self.is_constructor() {
            constructor_action(self.arity())
        } else {
            self.name.to_string()
        }
    }

    /// Physical lines of every statement in the body, nested ones included.
    pub fn statement_lines(&self) -> BTreeSet<u32> {
        fn walk(stmts: &[Stmt], out: &mut BTreeSet<u32>) {
            for s in stmts {
                out.insert(s.line);
                match &s.kind {
                    StmtKind::If {
                        then_branch,
                        else_branch,
                        ..
                    } => {
                        walk(then_branch, out);
                        walk(else_branch, out);
                    }
                    StmtKind::While { body, .. } => walk(body, out),
                    _ => {}
                }
            }
        }
        let mut out = BTreeSet::new();
        walk(&self.body, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDef {
    pub name: Arc<str>,
    pub file: Arc<str>,
    /// Declared in a dependency source rather than the application itself.
    pub external: bool,
    pub line: u32,
    pub fields: Vec<FieldDef>,
    pub constructors: Vec<MethodDef>,
    pub methods: Vec<MethodDef>,
}

impl ClassDef {
    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn field(&self, name: &str) -> Option<&FieldDef> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn method(&self, name: &str, arity: usize) -> Option<&MethodDef> {
        self.methods
            .iter()
            .find(|m| &*m.name == name && m.arity() == arity)
    }

    pub fn methods_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a MethodDef> + 'a {
        self.methods.iter().filter(move |m| &*m.name == name)
    }

    pub fn constructor(&self, arity: usize) -> Option<&MethodDef> {
        self.constructors.iter().find(|c| c.arity() == arity)
    }

    /// Constructor or method by frame-style name (`<init>` or a method name).
    pub fn member_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a MethodDef> + 'a {
        self.constructors
            .iter()
            .chain(self.methods.iter())
            .filter(move |m| &*m.name == name)
    }

    pub fn public_constructors(&self) -> impl Iterator<Item = &MethodDef> {
        self.constructors.iter().filter(|c| !c.private)
    }

    pub fn public_methods(&self) -> impl Iterator<Item = &MethodDef> {
        self.methods.iter().filter(|m| !m.private)
    }
}

/// A parsed, validated program. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub(crate) classes: BTreeMap<String, ClassDef>,
}

impl Program {
    pub fn class(&self, name: &str) -> Option<&ClassDef> {
        self.classes.get(name)
    }

    /// All classes, ordered by name.
    pub fn classes(&self) -> impl Iterator<Item = &ClassDef> {
        self.classes.values()
    }

    pub fn internal_classes(&self) -> impl Iterator<Item = &ClassDef> {
        self.classes.values().filter(|c| !c.external)
    }

    pub fn class_names(&self) -> impl Iterator<Item = &str> {
        self.classes.keys().map(String::as_str)
    }

    /// Does `line` hold a statement of `class.method` (any overload)?
    pub fn has_line(&self, class: &str, method: &str, line: u32) -> bool {
        self.class(class).is_some_and(|c| {
            c.member_named(method)
                .any(|m| m.statement_lines().contains(&line))
        })
    }
}
