//! Deterministic tree-walking interpreter with execution tracing.
//!
//! Every test execution records the lines it runs, one event per
//! constructor or method entry (internal calls included), and the stack
//! trace of the exception that terminated it, if any. Exceptions cannot be
//! caught: the first one raised ends the execution.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::stacktrace::{format_frames, Frame};
use super::testcase::{Arg, Statement, TestCase};

pub const DEFAULT_STEP_LIMIT: u64 = 100_000;
const MAX_CALL_DEPTH: usize = 200;

/// Names of the exceptions raised by the runtime itself.
pub mod exceptions {
    pub const NULL_DEREFERENCE: &str = "NullDereference";
    pub const DIVIDE_BY_ZERO: &str = "DivideByZero";
    pub const BUDGET_EXHAUSTED: &str = "BudgetExhausted";
    pub const HARNESS_ERROR: &str = "HarnessError";
    pub const TYPE_ERROR: &str = "TypeError";
    pub const STACK_OVERFLOW: &str = "StackOverflow";
    pub const ASSERTION_FAILED: &str = "AssertionFailed";
}
use exceptions::*;

const HARNESS_METHOD: &str = "test";
const HARNESS_FILE: &str = "harness";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineHit {
    pub class: Arc<str>,
    pub method: Arc<str>,
    pub line: u32,
}

/// Snapshot of an argument passed to a call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArgValue {
    Int(i64),
    Bool(bool),
    Str(String),
    Null,
    Object { id: u64, class: Arc<str> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallEvent {
    pub object: u64,
    pub class: Arc<str>,
    /// `<init>` for constructors.
    pub method: Arc<str>,
    pub arity: usize,
    pub args: Vec<ArgValue>,
    /// Invoked directly by a test statement rather than by program code.
    pub from_harness: bool,
    /// Index of the test statement running when the call happened.
    pub statement: usize,
}

impl CallEvent {
    /// Action name as used in call sequences.
    pub fn action(&self) -> String {
        if &*self.method == CONSTRUCTOR {
            constructor_action(self.arity)
        } else {
            self.method.to_string()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thrown {
    pub exception: String,
    pub message: Option<String>,
    /// Innermost first; the last frame is the test harness.
    pub frames: Vec<Frame>,
}

impl Thrown {
    pub fn stack_trace(&self) -> String {
        format_frames(&self.exception, self.message.as_deref(), &self.frames)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub executed_lines: Vec<LineHit>,
    pub call_events: Vec<CallEvent>,
    pub thrown: Option<Thrown>,
    pub steps: u64,
    /// Number of test statements that started executing.
    pub statements_started: usize,
    /// Fitness evaluations this execution accounts for.
    pub evaluations: u32,
}

impl ExecutionResult {
    pub fn threw(&self, exception: &str) -> bool {
        self.thrown.as_ref().is_some_and(|t| t.exception == exception)
    }

    /// The test itself was malformed or ran out of steps.
    pub fn is_unusable(&self) -> bool {
        self.threw(HARNESS_ERROR) || self.threw(BUDGET_EXHAUSTED)
    }
}

/// Runs `test` against `program`. Never panics on malformed tests; those end
/// with a `HarnessError`.
pub fn execute_test(program: &Program, test: &TestCase, step_limit: u64) -> ExecutionResult {
    let mut m = Machine::new(program, step_limit);
    let (thrown, started) = m.run(test);
    ExecutionResult {
        executed_lines: m.lines,
        call_events: m.events,
        thrown,
        steps: m.steps,
        statements_started: started,
        evaluations: 1,
    }
}

struct Object<'p> {
    id: u64,
    class: &'p ClassDef,
    fields: RefCell<Vec<Value<'p>>>,
}

#[derive(Clone)]
enum Value<'p> {
    Int(i64),
    Bool(bool),
    Str(Rc<str>),
    Null,
    Obj(Rc<Object<'p>>),
}

impl fmt::Display for Value<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(v) => write!(f, "{v}"),
            Value::Str(s) => f.write_str(s),
            Value::Null => f.write_str("null"),
            Value::Obj(o) => write!(f, "{}@{}", o.class.name, o.id),
        }
    }
}

impl<'p> Value<'p> {
    fn from_literal(l: &Literal) -> Self {
        match l {
            Literal::Int(v) => Value::Int(*v),
            Literal::Bool(v) => Value::Bool(*v),
            Literal::Str(s) => Value::Str(Rc::from(s.as_str())),
            Literal::Null => Value::Null,
        }
    }

    fn default_for(kind: &Kind) -> Self {
        match kind {
            Kind::Int => Value::Int(0),
            Kind::Bool => Value::Bool(false),
            Kind::Str => Value::Str(Rc::from("")),
            Kind::Class(_) => Value::Null,
        }
    }

    fn matches(&self, kind: &Kind) -> bool {
        match (self, kind) {
            (Value::Int(_), Kind::Int) | (Value::Bool(_), Kind::Bool) | (Value::Str(_), Kind::Str) => true,
            (Value::Null, Kind::Class(_)) => true,
            (Value::Obj(o), Kind::Class(c)) => &*o.class.name == c.as_str(),
            _ => false,
        }
    }

    fn snapshot(&self) -> ArgValue {
        match self {
            Value::Int(v) => ArgValue::Int(*v),
            Value::Bool(v) => ArgValue::Bool(*v),
            Value::Str(s) => ArgValue::Str(s.to_string()),
            Value::Null => ArgValue::Null,
            Value::Obj(o) => ArgValue::Object {
                id: o.id,
                class: o.class.name.clone(),
            },
        }
    }

    fn equals(&self, other: &Value<'p>) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Null, Value::Null) => true,
            (Value::Obj(a), Value::Obj(b)) => Rc::ptr_eq(a, b),
            _ => false,
        }
    }
}

struct Raise {
    exception: String,
    message: Option<String>,
    frames: Vec<Frame>,
}

enum Flow<'p> {
    Next,
    Return(Value<'p>),
}

struct ActiveFrame<'p> {
    class: &'p str,
    method: &'p str,
    file: &'p str,
    line: u32,
}

enum Scope<'a, 'p> {
    Method {
        this: &'a Rc<Object<'p>>,
        locals: &'a [Value<'p>],
    },
    Harness(&'a HashMap<String, Value<'p>>),
}

struct Machine<'p> {
    program: &'p Program,
    step_limit: u64,
    steps: u64,
    next_id: u64,
    stack: Vec<ActiveFrame<'p>>,
    lines: Vec<LineHit>,
    events: Vec<CallEvent>,
    statement: usize,
    #[cfg(test)]
    shadow_entries: std::collections::BTreeMap<(u64, String), usize>,
}

impl<'p> Machine<'p> {
    fn new(program: &'p Program, step_limit: u64) -> Self {
        Self {
            program,
            step_limit: step_limit.max(1),
            steps: 0,
            next_id: 1,
            stack: Vec::new(),
            lines: Vec::new(),
            events: Vec::new(),
            statement: 0,
            #[cfg(test)]
            shadow_entries: Default::default(),
        }
    }

    fn raise(&self, exception: &str, message: Option<String>) -> Raise {
        Raise {
            exception: exception.to_string(),
            message,
            frames: self
                .stack
                .iter()
                .rev()
                .map(|f| Frame {
                    class: f.class.to_string(),
                    method: f.method.to_string(),
                    file: f.file.to_string(),
                    line: f.line,
                })
                .collect(),
        }
    }

    fn harness_error(&self, message: String) -> Raise {
        self.raise(HARNESS_ERROR, Some(message))
    }

    fn step(&mut self) -> Result<(), Raise> {
        self.steps += 1;
        if self.steps > self.step_limit {
            return Err(self.raise(BUDGET_EXHAUSTED, Some(format!("step limit {} exceeded", self.step_limit))));
        }
        Ok(())
    }

    fn run(&mut self, test: &TestCase) -> (Option<Thrown>, usize) {
        self.stack.push(ActiveFrame {
            class: HARNESS_CLASS,
            method: HARNESS_METHOD,
            file: HARNESS_FILE,
            line: 1,
        });
        let mut env: HashMap<String, Value<'p>> = HashMap::new();
        for (i, stmt) in test.statements.iter().enumerate() {
            self.statement = i;
            self.stack[0].line = i as u32 + 1;
            if let Err(r) = self.step().and_then(|_| self.harness_statement(stmt, &mut env)) {
                return (
                    Some(Thrown {
                        exception: r.exception,
                        message: r.message,
                        frames: r.frames,
                    }),
                    i + 1,
                );
            }
        }
        (None, test.statements.len())
    }

    fn lookup(&self, env: &HashMap<String, Value<'p>>, var: &str) -> Result<Value<'p>, Raise> {
        env.get(var)
            .cloned()
            .ok_or_else(|| self.harness_error(format!("undefined variable {var}")))
    }

    fn harness_args(&self, env: &HashMap<String, Value<'p>>, args: &[Arg]) -> Result<Vec<Value<'p>>, Raise> {
        args.iter()
            .map(|a| match a {
                Arg::Var(v) => self.lookup(env, v),
                Arg::Lit(l) => Ok(Value::from_literal(l)),
            })
            .collect()
    }

    fn check_args(&self, m: &MethodDef, args: &[Value<'p>]) -> Option<String> {
        m.params
            .iter()
            .zip(args)
            .find(|(p, v)| !v.matches(&p.kind))
            .map(|(p, v)| format!("argument {} of {} expects {}, got {v}", p.name, m.name, p.kind))
    }

    fn harness_statement(&mut self, stmt: &Statement, env: &mut HashMap<String, Value<'p>>) -> Result<(), Raise> {
        match stmt {
            Statement::Literal { var, value } => {
                env.insert(var.clone(), Value::from_literal(value));
            }
            Statement::Construct { var, class, args } => {
                let program = self.program;
                let cdef = program
                    .class(class)
                    .ok_or_else(|| self.harness_error(format!("unknown class {class}")))?;
                let ctor = cdef
                    .constructor(args.len())
                    .filter(|c| !c.private)
                    .ok_or_else(|| self.harness_error(format!("no accessible constructor {class}/{}", args.len())))?;
                let values = self.harness_args(env, args)?;
                if let Some(msg) = self.check_args(ctor, &values) {
                    return Err(self.harness_error(msg));
                }
                let obj = self.instantiate(cdef, ctor, values, true)?;
                env.insert(var.clone(), obj);
            }
            Statement::Call {
                result,
                receiver,
                method,
                args,
            } => {
                let recv = match self.lookup(env, receiver)? {
                    Value::Obj(o) => o,
                    Value::Null => {
                        return Err(self.raise(NULL_DEREFERENCE, None));
                    }
                    other => return Err(self.harness_error(format!("{receiver} = {other} is not an object"))),
                };
                let class = recv.class;
                let mdef = class
                    .method(method, args.len())
                    .filter(|m| !m.private)
                    .ok_or_else(|| {
                        self.harness_error(format!("no accessible method {}.{method}/{}", class.name, args.len()))
                    })?;
                let values = self.harness_args(env, args)?;
                if let Some(msg) = self.check_args(mdef, &values) {
                    return Err(self.harness_error(msg));
                }
                let value = self.invoke(&recv, mdef, values, true)?;
                if let Some(r) = result {
                    env.insert(r.clone(), value);
                }
            }
            Statement::Assert { expr } => match self.eval(expr, &Scope::Harness(env))? {
                Value::Bool(true) => {}
                Value::Bool(false) => {
                    return Err(self.raise(ASSERTION_FAILED, Some(expr.to_string())));
                }
                other => return Err(self.harness_error(format!("assertion is not boolean: {other}"))),
            },
        }
        Ok(())
    }

    fn instantiate(
        &mut self,
        class: &'p ClassDef,
        ctor: &'p MethodDef,
        args: Vec<Value<'p>>,
        from_harness: bool,
    ) -> Result<Value<'p>, Raise> {
        let id = self.next_id;
        self.next_id += 1;
        let obj = Rc::new(Object {
            id,
            class,
            fields: RefCell::new(class.fields.iter().map(|f| Value::default_for(&f.kind)).collect()),
        });
        self.invoke(&obj, ctor, args, from_harness)?;
        Ok(Value::Obj(obj))
    }

    fn invoke(
        &mut self,
        this: &Rc<Object<'p>>,
        m: &'p MethodDef,
        args: Vec<Value<'p>>,
        from_harness: bool,
    ) -> Result<Value<'p>, Raise> {
        if self.stack.len() > MAX_CALL_DEPTH {
            return Err(self.raise(STACK_OVERFLOW, None));
        }
        self.events.push(CallEvent {
            object: this.id,
            class: this.class.name.clone(),
            method: m.name.clone(),
            arity: m.arity(),
            args: args.iter().map(Value::snapshot).collect(),
            from_harness,
            statement: self.statement,
        });
        #[cfg(test)]
        {
            *self.shadow_entries.entry((this.id, m.action_name())).or_insert(0) += 1;
        }
        self.stack.push(ActiveFrame {
            class: &this.class.name,
            method: &m.name,
            file: &this.class.file,
            line: m.line,
        });
        let mut locals = vec![Value::Null; m.locals.len().max(args.len())];
        for (slot, v) in args.into_iter().enumerate() {
            locals[slot] = v;
        }
        let flow = self.block(&m.body, this, m, &mut locals)?;
        self.stack.pop();
        Ok(match flow {
            Flow::Return(v) => v,
            Flow::Next => Value::Null,
        })
    }

    fn enter_line(&mut self, m: &'p MethodDef, class: &'p ClassDef, line: u32) -> Result<(), Raise> {
        if let Some(top) = self.stack.last_mut() {
            top.line = line;
        }
        self.lines.push(LineHit {
            class: class.name.clone(),
            method: m.name.clone(),
            line,
        });
        self.step()
    }

    fn block(
        &mut self,
        stmts: &'p [Stmt],
        this: &Rc<Object<'p>>,
        m: &'p MethodDef,
        locals: &mut Vec<Value<'p>>,
    ) -> Result<Flow<'p>, Raise> {
        for s in stmts {
            if let Flow::Return(v) = self.stmt(s, this, m, locals)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Next)
    }

    fn stmt(
        &mut self,
        s: &'p Stmt,
        this: &Rc<Object<'p>>,
        m: &'p MethodDef,
        locals: &mut Vec<Value<'p>>,
    ) -> Result<Flow<'p>, Raise> {
        let class = this.class;
        self.enter_line(m, class, s.line)?;
        macro_rules! eval {
            ($e:expr) => {
                self.eval($e, &Scope::Method { this, locals })?
            };
        }
        match &s.kind {
            StmtKind::Assign { slot, value } => {
                let v = eval!(value);
                locals[*slot] = v;
            }
            StmtKind::SetField { target, field, value } => {
                let obj = eval!(target);
                let v = eval!(value);
                let obj = self.object_of(obj)?;
                let idx = self.field_of(&obj, field)?;
                obj.fields.borrow_mut()[idx] = v;
            }
            StmtKind::Expr(e) => {
                eval!(e);
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let c = eval!(cond);
                let branch = if self.truth(c)? { then_branch } else { else_branch };
                return self.block(branch, this, m, locals);
            }
            StmtKind::While { cond, body } => {
                let mut first = true;
                loop {
                    if !first {
                        self.enter_line(m, class, s.line)?;
                    }
                    first = false;
                    let c = eval!(cond);
                    if !self.truth(c)? {
                        break;
                    }
                    if let Flow::Return(v) = self.block(body, this, m, locals)? {
                        return Ok(Flow::Return(v));
                    }
                }
            }
            StmtKind::Return(value) => {
                let v = match value {
                    Some(e) => eval!(e),
                    None => Value::Null,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Throw { exception, message } => {
                let msg = match message {
                    Some(e) => Some(eval!(e).to_string()),
                    None => None,
                };
                // Re-pin the line: evaluating the message may have moved it.
                if let Some(top) = self.stack.last_mut() {
                    top.line = s.line;
                }
                return Err(self.raise(exception, msg));
            }
        }
        Ok(Flow::Next)
    }

    fn truth(&self, v: Value<'p>) -> Result<bool, Raise> {
        match v {
            Value::Bool(b) => Ok(b),
            other => Err(self.raise(TYPE_ERROR, Some(format!("condition is not boolean: {other}")))),
        }
    }

    fn object_of(&self, v: Value<'p>) -> Result<Rc<Object<'p>>, Raise> {
        match v {
            Value::Obj(o) => Ok(o),
            Value::Null => Err(self.raise(NULL_DEREFERENCE, None)),
            other => Err(self.raise(TYPE_ERROR, Some(format!("{other} is not an object")))),
        }
    }

    fn field_of(&self, obj: &Object<'p>, field: &str) -> Result<usize, Raise> {
        obj.class
            .field_index(field)
            .ok_or_else(|| self.raise(TYPE_ERROR, Some(format!("{} has no field {field}", obj.class.name))))
    }

    fn eval(&mut self, e: &Expr, scope: &Scope<'_, 'p>) -> Result<Value<'p>, Raise> {
        Ok(match e {
            Expr::Lit(l) => Value::from_literal(l),
            Expr::This => match scope {
                Scope::Method { this, .. } => Value::Obj(Rc::clone(this)),
                Scope::Harness(_) => return Err(self.harness_error("'this' outside a method".into())),
            },
            Expr::Local(slot) => match scope {
                Scope::Method { locals, .. } => locals[*slot].clone(),
                Scope::Harness(_) => return Err(self.harness_error("local slot outside a method".into())),
            },
            Expr::Name(n) => match scope {
                Scope::Harness(env) => self.lookup(env, n)?,
                Scope::Method { .. } => return Err(self.raise(TYPE_ERROR, Some(format!("unbound name {n}")))),
            },
            Expr::Field(target, field) => {
                let obj = self.eval(target, scope)?;
                let obj = self.object_of(obj)?;
                let idx = self.field_of(&obj, field)?;
                let v = obj.fields.borrow()[idx].clone();
                v
            }
            Expr::Call {
                receiver,
                method,
                args,
            } => {
                let recv = self.eval(receiver, scope)?;
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval(a, scope)?);
                }
                let recv = self.object_of(recv)?;
                let harness = matches!(scope, Scope::Harness(_));
                let mdef = match recv.class.method(method, values.len()) {
                    Some(m) if !(harness && m.private) => m,
                    _ if harness => {
                        return Err(self.harness_error(format!(
                            "no accessible method {}.{method}/{}",
                            recv.class.name,
                            values.len()
                        )))
                    }
                    _ => {
                        return Err(self.raise(
                            TYPE_ERROR,
                            Some(format!("no method {}.{method}/{}", recv.class.name, values.len())),
                        ))
                    }
                };
                if let Some(msg) = self.check_args(mdef, &values) {
                    return Err(self.raise(if harness { HARNESS_ERROR } else { TYPE_ERROR }, Some(msg)));
                }
                self.invoke(&recv, mdef, values, harness)?
            }
            Expr::New { class, args } => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval(a, scope)?);
                }
                let program = self.program;
                let harness = matches!(scope, Scope::Harness(_));
                let cdef = program
                    .class(class)
                    .ok_or_else(|| self.raise(TYPE_ERROR, Some(format!("unknown class {class}"))))?;
                let ctor = cdef
                    .constructor(values.len())
                    .filter(|c| !(harness && c.private))
                    .ok_or_else(|| self.raise(TYPE_ERROR, Some(format!("no constructor {class}/{}", values.len()))))?;
                if let Some(msg) = self.check_args(ctor, &values) {
                    return Err(self.raise(TYPE_ERROR, Some(msg)));
                }
                self.instantiate(cdef, ctor, values, harness)?
            }
            Expr::Unary(op, inner) => {
                let v = self.eval(inner, scope)?;
                match (op, v) {
                    (UnOp::Neg, Value::Int(i)) => Value::Int(i.wrapping_neg()),
                    (UnOp::Not, Value::Bool(b)) => Value::Bool(!b),
                    (_, other) => return Err(self.raise(TYPE_ERROR, Some(format!("bad operand {other}")))),
                }
            }
            Expr::Binary(BinOp::And, l, r) => {
                let lv = self.eval(l, scope)?;
                if !self.truth(lv)? {
                    return Ok(Value::Bool(false));
                }
                let rv = self.eval(r, scope)?;
                Value::Bool(self.truth(rv)?)
            }
            Expr::Binary(BinOp::Or, l, r) => {
                let lv = self.eval(l, scope)?;
                if self.truth(lv)? {
                    return Ok(Value::Bool(true));
                }
                let rv = self.eval(r, scope)?;
                Value::Bool(self.truth(rv)?)
            }
            Expr::Binary(op, l, r) => {
                let lv = self.eval(l, scope)?;
                let rv = self.eval(r, scope)?;
                self.binary(*op, lv, rv)?
            }
        })
    }

    fn binary(&self, op: BinOp, l: Value<'p>, r: Value<'p>) -> Result<Value<'p>, Raise> {
        Ok(match (op, &l, &r) {
            (BinOp::Eq, _, _) => Value::Bool(l.equals(&r)),
            (BinOp::Ne, _, _) => Value::Bool(!l.equals(&r)),
            (BinOp::Add, Value::Int(a), Value::Int(b)) => Value::Int(a.wrapping_add(*b)),
            (BinOp::Add, Value::Str(_), _) | (BinOp::Add, _, Value::Str(_)) => {
                Value::Str(Rc::from(format!("{l}{r}").as_str()))
            }
            (BinOp::Sub, Value::Int(a), Value::Int(b)) => Value::Int(a.wrapping_sub(*b)),
            (BinOp::Mul, Value::Int(a), Value::Int(b)) => Value::Int(a.wrapping_mul(*b)),
            (BinOp::Div, Value::Int(_), Value::Int(0)) => {
                return Err(self.raise(DIVIDE_BY_ZERO, Some("/ by zero".into())));
            }
            (BinOp::Div, Value::Int(a), Value::Int(b)) => Value::Int(a.wrapping_div(*b)),
            (BinOp::Lt, Value::Int(a), Value::Int(b)) => Value::Bool(a < b),
            (BinOp::Le, Value::Int(a), Value::Int(b)) => Value::Bool(a <= b),
            (BinOp::Gt, Value::Int(a), Value::Int(b)) => Value::Bool(a > b),
            (BinOp::Ge, Value::Int(a), Value::Int(b)) => Value::Bool(a >= b),
            _ => {
                return Err(self.raise(TYPE_ERROR, Some(format!("bad operands for {op:?}: {l}, {r}"))));
            }
        })
    }
}

#[cfg(test)]
pub(crate) fn execute_with_shadow(
    program: &Program,
    test: &TestCase,
    step_limit: u64,
) -> (ExecutionResult, std::collections::BTreeMap<(u64, String), usize>) {
    let mut m = Machine::new(program, step_limit);
    let (thrown, started) = m.run(test);
    let shadow = std::mem::take(&mut m.shadow_entries);
    (
        ExecutionResult {
            executed_lines: m.lines,
            call_events: m.events,
            thrown,
            steps: m.steps,
            statements_started: started,
            evaluations: 1,
        },
        shadow,
    )
}
