//! Recursive-descent parser for `.sut` program files.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::SutError;

/// One program source file.
#[derive(Debug, Clone)]
pub struct SourceFile {
    pub name: String,
    pub text: String,
    /// Dependency source (classes not belonging to the application).
    pub external: bool,
}

impl SourceFile {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            text: text.into(),
            external: false,
        }
    }

    pub fn external(name: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            external: true,
            ..Self::new(name, text)
        }
    }
}

pub fn parse_program(sources: &[SourceFile]) -> Result<Program, SutError> {
    let mut classes = BTreeMap::new();
    for src in sources {
        let mut p = Parser::new(&src.name, tokenize(&src.name, &src.text)?);
        while !p.at(&Tok::Eof) {
            let class = p.class(src)?;
            let name = class.name.to_string();
            if name == HARNESS_CLASS {
                return Err(p.error_at(class.line, format!("class name {name} is reserved")));
            }
            if classes.contains_key(&name) {
                return Err(SutError::DuplicateClass(name));
            }
            classes.insert(name, class);
        }
    }
    if classes.is_empty() {
        return Err(SutError::NoClasses);
    }
    let program = Program { classes };
    validate(&program)?;
    Ok(program)
}

struct MethodCtx<'c> {
    class: &'c str,
    fields: &'c [FieldDef],
    locals: Vec<LocalVar>,
}

impl MethodCtx<'_> {
    fn slot(&self, name: &str) -> Option<usize> {
        self.locals.iter().position(|l| l.name == name)
    }
}

pub(crate) struct Parser<'a> {
    file: &'a str,
    toks: Vec<Token>,
    pos: usize,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(file: &'a str, toks: Vec<Token>) -> Self {
        Self { file, toks, pos: 0 }
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub(crate) fn line(&self) -> u32 {
        self.toks[self.pos].line
    }

    pub(crate) fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    pub(crate) fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error_at(&self, line: u32, message: String) -> SutError {
        SutError::Syntax {
            file: self.file.to_string(),
            line,
            message,
        }
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> SutError {
        self.error_at(self.line(), message.into())
    }

    pub(crate) fn expect(&mut self, t: Tok) -> Result<(), SutError> {
        if self.peek() == &t {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {t:?}, found {:?}", self.peek())))
        }
    }

    pub(crate) fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_keyword(&mut self, kw: &str) -> Result<(), SutError> {
        if self.at_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected '{kw}', found {:?}", self.peek())))
        }
    }

    pub(crate) fn ident(&mut self) -> Result<String, SutError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.error(format!("expected identifier, found {other:?}"))),
        }
    }

    fn kind(&mut self) -> Result<Kind, SutError> {
        let name = match self.peek().clone() {
            Tok::Ident(s) => s,
            other => return Err(self.error(format!("expected type, found {other:?}"))),
        };
        self.bump();
        Ok(match name.as_str() {
            "int" => Kind::Int,
            "bool" => Kind::Bool,
            "string" => Kind::Str,
            _ if is_keyword(&name) => return Err(self.error(format!("'{name}' is not a type"))),
            _ => Kind::Class(name),
        })
    }

    fn class(&mut self, src: &SourceFile) -> Result<ClassDef, SutError> {
        let line = self.line();
        self.expect_keyword("class")?;
        let name = self.ident()?;
        self.expect(Tok::LBrace)?;

        let mut fields = Vec::new();
        // Bodies are parsed after all field declarations are known.
        let mut pending = Vec::new();
        while !self.at(&Tok::RBrace) {
            if self.at(&Tok::Eof) {
                return Err(self.error(format!("unterminated class {name}")));
            }
            if self.at_keyword("field") {
                let fline = self.line();
                self.bump();
                let fname = self.ident()?;
                self.expect(Tok::Colon)?;
                let kind = self.kind()?;
                self.expect(Tok::Semi)?;
                if fields.iter().any(|f: &FieldDef| f.name == fname) {
                    return Err(self.error_at(fline, format!("duplicate field {fname}")));
                }
                fields.push(FieldDef {
                    name: fname,
                    kind,
                    line: fline,
                });
                continue;
            }
            let mline = self.line();
            let private = self.at_keyword("private");
            if private {
                self.bump();
            }
            let mname = if self.at_keyword("new") {
                self.bump();
                CONSTRUCTOR.to_string()
            } else {
                self.expect_keyword("def")?;
                self.ident()?
            };
            self.expect(Tok::LParen)?;
            let mut params = Vec::new();
            if !self.at(&Tok::RParen) {
                loop {
                    let kind = self.kind()?;
                    let pname = self.ident()?;
                    if params.iter().any(|p: &Param| p.name == pname) {
                        return Err(self.error(format!("duplicate parameter {pname}")));
                    }
                    params.push(Param { name: pname, kind });
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen)?;
            let ret = if mname != CONSTRUCTOR && self.eat(&Tok::Colon) {
                Some(self.kind()?)
            } else {
                None
            };
            // Skip over the body for now, remembering where it starts.
            let body_start = self.pos;
            self.skip_block()?;
            pending.push((mline, private, mname, params, ret, body_start));
        }
        self.expect(Tok::RBrace)?;
        let end = self.pos;

        let mut constructors: Vec<MethodDef> = Vec::new();
        let mut methods: Vec<MethodDef> = Vec::new();
        for (mline, private, mname, params, ret, body_start) in pending {
            self.pos = body_start;
            let mut ctx = MethodCtx {
                class: &name,
                fields: &fields,
                locals: params
                    .iter()
                    .map(|p| LocalVar {
                        name: p.name.clone(),
                        declared: Some(p.kind.clone()),
                    })
                    .collect(),
            };
            let body = self.block(&mut ctx)?;
            let def = MethodDef {
                name: Arc::from(mname.as_str()),
                params,
                ret,
                private,
                line: mline,
                body,
                locals: ctx.locals,
            };
            let list = if def.is_constructor() {
                &mut constructors
            } else {
                &mut methods
            };
            if list
                .iter()
                .any(|m| m.name == def.name && m.arity() == def.arity())
            {
                return Err(self.error_at(
                    mline,
                    format!("duplicate signature {}/{} in {name}", def.name, def.arity()),
                ));
            }
            list.push(def);
        }
        self.pos = end;

        if constructors.is_empty() {
            constructors.push(MethodDef {
                name: Arc::from(CONSTRUCTOR),
                params: Vec::new(),
                ret: None,
                private: false,
                line,
                body: Vec::new(),
                locals: Vec::new(),
            });
        }

        Ok(ClassDef {
            name: Arc::from(name.as_str()),
            file: Arc::from(src.name.as_str()),
            external: src.external,
            line,
            fields,
            constructors,
            methods,
        })
    }

    fn skip_block(&mut self) -> Result<(), SutError> {
        self.expect(Tok::LBrace)?;
        let mut depth = 1;
        while depth > 0 {
            match self.bump() {
                Tok::LBrace => depth += 1,
                Tok::RBrace => depth -= 1,
                Tok::Eof => return Err(self.error("unterminated block")),
                _ => {}
            }
        }
        Ok(())
    }

    fn block(&mut self, ctx: &mut MethodCtx<'_>) -> Result<Vec<Stmt>, SutError> {
        self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        while !self.at(&Tok::RBrace) {
            stmts.push(self.stmt(ctx)?);
        }
        self.expect(Tok::RBrace)?;
        Ok(stmts)
    }

    fn stmt(&mut self, ctx: &mut MethodCtx<'_>) -> Result<Stmt, SutError> {
        let line = self.line();
        let kind = if self.at_keyword("let") {
            self.bump();
            let name = self.ident()?;
            let declared = if self.eat(&Tok::Colon) {
                Some(self.kind()?)
            } else {
                None
            };
            self.expect(Tok::Assign)?;
            // The initializer cannot see the variable being declared.
            let value = self.expr(Some(&mut *ctx))?;
            self.expect(Tok::Semi)?;
            let slot = match ctx.slot(&name) {
                Some(slot) => {
                    if declared.is_some() {
                        ctx.locals[slot].declared = declared;
                    }
                    slot
                }
                None => {
                    ctx.locals.push(LocalVar { name, declared });
                    ctx.locals.len() - 1
                }
            };
            StmtKind::Assign { slot, value }
        } else if self.at_keyword("if") {
            return self.if_stmt(ctx);
        } else if self.at_keyword("while") {
            self.bump();
            self.expect(Tok::LParen)?;
            let cond = self.expr(Some(&mut *ctx))?;
            self.expect(Tok::RParen)?;
            let body = self.block(ctx)?;
            StmtKind::While { cond, body }
        } else if self.at_keyword("return") {
            self.bump();
            let value = if self.at(&Tok::Semi) {
                None
            } else {
                Some(self.expr(Some(&mut *ctx))?)
            };
            self.expect(Tok::Semi)?;
            StmtKind::Return(value)
        } else if self.at_keyword("throw") {
            self.bump();
            let exception = self.ident()?;
            self.expect(Tok::LParen)?;
            let message = if self.at(&Tok::RParen) {
                None
            } else {
                Some(self.expr(Some(&mut *ctx))?)
            };
            self.expect(Tok::RParen)?;
            self.expect(Tok::Semi)?;
            StmtKind::Throw { exception, message }
        } else {
            let lhs = self.expr(Some(&mut *ctx))?;
            if self.eat(&Tok::Assign) {
                let value = self.expr(Some(&mut *ctx))?;
                self.expect(Tok::Semi)?;
                match lhs {
                    Expr::Local(slot) => StmtKind::Assign { slot, value },
                    Expr::Field(target, field) => StmtKind::SetField {
                        target: *target,
                        field,
                        value,
                    },
                    _ => return Err(self.error_at(line, "invalid assignment target".into())),
                }
            } else {
                self.expect(Tok::Semi)?;
                StmtKind::Expr(lhs)
            }
        };
        Ok(Stmt { line, kind })
    }

    fn if_stmt(&mut self, ctx: &mut MethodCtx<'_>) -> Result<Stmt, SutError> {
        let line = self.line();
        self.expect_keyword("if")?;
        self.expect(Tok::LParen)?;
        let cond = self.expr(Some(&mut *ctx))?;
        self.expect(Tok::RParen)?;
        let then_branch = self.block(ctx)?;
        let else_branch = if self.at_keyword("else") {
            self.bump();
            if self.at_keyword("if") {
                vec![self.if_stmt(ctx)?]
            } else {
                self.block(ctx)?
            }
        } else {
            Vec::new()
        };
        Ok(Stmt {
            line,
            kind: StmtKind::If {
                cond,
                then_branch,
                else_branch,
            },
        })
    }

    /// Parses an expression. Without a method context, bare identifiers
    /// are test-level variable names.
    fn expr(&mut self, mut ctx: Option<&mut MethodCtx<'_>>) -> Result<Expr, SutError> {
        self.binary(&mut ctx, 0)
    }

    pub(crate) fn harness_expr(&mut self) -> Result<Expr, SutError> {
        self.expr(None)
    }

    fn binary(&mut self, ctx: &mut Option<&mut MethodCtx<'_>>, level: u8) -> Result<Expr, SutError> {
        const LEVELS: u8 = 6;
        if level == LEVELS {
            return self.unary(ctx);
        }
        let mut lhs = self.binary(ctx, level + 1)?;
        loop {
            let op = match (level, self.peek()) {
                (0, Tok::OrOr) => BinOp::Or,
                (1, Tok::AndAnd) => BinOp::And,
                (2, Tok::EqEq) => BinOp::Eq,
                (2, Tok::NotEq) => BinOp::Ne,
                (3, Tok::Lt) => BinOp::Lt,
                (3, Tok::Le) => BinOp::Le,
                (3, Tok::Gt) => BinOp::Gt,
                (3, Tok::Ge) => BinOp::Ge,
                (4, Tok::Plus) => BinOp::Add,
                (4, Tok::Minus) => BinOp::Sub,
                (5, Tok::Star) => BinOp::Mul,
                (5, Tok::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.binary(ctx, level + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self, ctx: &mut Option<&mut MethodCtx<'_>>) -> Result<Expr, SutError> {
        if self.eat(&Tok::Minus) {
            if let Tok::Int(v) = *self.peek() {
                self.bump();
                return self.postfix(ctx, Expr::Lit(Literal::Int(-v)));
            }
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary(ctx)?)));
        }
        if self.eat(&Tok::Bang) {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary(ctx)?)));
        }
        let primary = self.primary(ctx)?;
        self.postfix(ctx, primary)
    }

    fn args(&mut self, ctx: &mut Option<&mut MethodCtx<'_>>) -> Result<Vec<Expr>, SutError> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                args.push(self.binary(ctx, 0)?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn postfix(&mut self, ctx: &mut Option<&mut MethodCtx<'_>>, mut e: Expr) -> Result<Expr, SutError> {
        while self.eat(&Tok::Dot) {
            let name = self.ident()?;
            if self.at(&Tok::LParen) {
                let args = self.args(ctx)?;
                e = Expr::Call {
                    receiver: Box::new(e),
                    method: name,
                    args,
                };
            } else {
                if e == Expr::This {
                    if let Some(c) = ctx.as_deref() {
                        if !c.fields.iter().any(|f| f.name == name) {
                            return Err(SutError::Undeclared {
                                file: self.file.to_string(),
                                line: self.line(),
                                name: format!("{}.{name}", c.class),
                            });
                        }
                    }
                }
                e = Expr::Field(Box::new(e), name);
            }
        }
        Ok(e)
    }

    fn primary(&mut self, ctx: &mut Option<&mut MethodCtx<'_>>) -> Result<Expr, SutError> {
        let line = self.line();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Lit(Literal::Int(v)))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Lit(Literal::Str(s)))
            }
            Tok::LParen => {
                self.bump();
                let e = self.binary(ctx, 0)?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(word) => match word.as_str() {
                "true" | "false" => {
                    self.bump();
                    Ok(Expr::Lit(Literal::Bool(word == "true")))
                }
                "null" => {
                    self.bump();
                    Ok(Expr::Lit(Literal::Null))
                }
                "this" if ctx.is_some() => {
                    self.bump();
                    Ok(Expr::This)
                }
                "new" => {
                    self.bump();
                    let class = self.ident()?;
                    let args = self.args(ctx)?;
                    Ok(Expr::New { class, args })
                }
                _ if is_keyword(&word) => Err(self.error(format!("unexpected keyword '{word}'"))),
                _ => {
                    self.bump();
                    match ctx.as_deref() {
                        None => Ok(Expr::Name(word)),
                        Some(_) if self.at(&Tok::LParen) => {
                            let args = self.args(ctx)?;
                            Ok(Expr::Call {
                                receiver: Box::new(Expr::This),
                                method: word,
                                args,
                            })
                        }
                        Some(c) => match c.slot(&word) {
                            Some(slot) => Ok(Expr::Local(slot)),
                            None => Err(SutError::Undeclared {
                                file: self.file.to_string(),
                                line,
                                name: word,
                            }),
                        },
                    }
                }
            },
            other => Err(self.error(format!("unexpected token {other:?}"))),
        }
    }

    /// True when the next tokens are `IDENT =` (not `==`).
    pub(crate) fn at_binding(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if !is_keyword(s)) && self.peek_at(1) == &Tok::Assign
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "class"
            | "field"
            | "new"
            | "def"
            | "private"
            | "let"
            | "if"
            | "else"
            | "while"
            | "return"
            | "throw"
            | "this"
            | "true"
            | "false"
            | "null"
            | "int"
            | "bool"
            | "string"
            | "test"
            | "assert"
    )
}

/// Checks that every class referenced by a type or `new` expression exists.
fn validate(program: &Program) -> Result<(), SutError> {
    let check_kind = |class: &ClassDef, line: u32, kind: &Kind| match kind {
        Kind::Class(name) if program.class(name).is_none() => Err(SutError::Undeclared {
            file: class.file.to_string(),
            line,
            name: name.clone(),
        }),
        _ => Ok(()),
    };
    fn exprs_in(stmts: &[Stmt], out: &mut Vec<(u32, Expr)>) {
        for s in stmts {
            match &s.kind {
                StmtKind::Assign { value, .. } => out.push((s.line, value.clone())),
                StmtKind::SetField { target, value, .. } => {
                    out.push((s.line, target.clone()));
                    out.push((s.line, value.clone()));
                }
                StmtKind::Expr(e) => out.push((s.line, e.clone())),
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    out.push((s.line, cond.clone()));
                    exprs_in(then_branch, out);
                    exprs_in(else_branch, out);
                }
                StmtKind::While { cond, body } => {
                    out.push((s.line, cond.clone()));
                    exprs_in(body, out);
                }
                StmtKind::Return(Some(e)) => out.push((s.line, e.clone())),
                StmtKind::Throw {
                    message: Some(e), ..
                } => out.push((s.line, e.clone())),
                _ => {}
            }
        }
    }
    fn news(e: &Expr, out: &mut Vec<String>) {
        match e {
            Expr::New { class, args } => {
                out.push(class.clone());
                args.iter().for_each(|a| news(a, out));
            }
            Expr::Call { receiver, args, .. } => {
                news(receiver, out);
                args.iter().for_each(|a| news(a, out));
            }
            Expr::Field(e, _) | Expr::Unary(_, e) => news(e, out),
            Expr::Binary(_, l, r) => {
                news(l, out);
                news(r, out);
            }
            _ => {}
        }
    }

    for class in program.classes() {
        for f in &class.fields {
            check_kind(class, f.line, &f.kind)?;
        }
        for m in class.constructors.iter().chain(&class.methods) {
            for p in &m.params {
                check_kind(class, m.line, &p.kind)?;
            }
            if let Some(r) = &m.ret {
                check_kind(class, m.line, r)?;
            }
            for l in &m.locals {
                if let Some(k) = &l.declared {
                    check_kind(class, m.line, k)?;
                }
            }
            let mut exprs = Vec::new();
            exprs_in(&m.body, &mut exprs);
            for (line, e) in exprs {
                let mut classes = Vec::new();
                news(&e, &mut classes);
                for c in classes {
                    check_kind(class, line, &Kind::Class(c))?;
                }
            }
        }
    }
    Ok(())
}
