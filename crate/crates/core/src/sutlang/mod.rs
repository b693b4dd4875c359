//! The system-under-test language: classes, tests, stack traces and an
//! interpreter that executes tests against a parsed program.

pub mod ast;
pub mod interp;
mod lexer;
pub mod parser;
pub mod stacktrace;
pub mod testcase;

use thiserror::Error;

pub use ast::{ClassDef, Kind, Literal, MethodDef, Program, CONSTRUCTOR, HARNESS_CLASS};
pub use interp::{execute_test, CallEvent, ExecutionResult, Thrown, DEFAULT_STEP_LIMIT};
pub use parser::{parse_program, SourceFile};
pub use stacktrace::{parse_stack_trace, CrashReport, Frame, TraceError};
pub use testcase::{parse_tests, Arg, Fragment, Statement, TestCase, VarKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SutError {
    #[error("{file}:{line}: {message}")]
    Syntax { file: String, line: u32, message: String },
    #[error("class {0} is declared more than once")]
    DuplicateClass(String),
    #[error("no classes declared")]
    NoClasses,
    #[error("{file}:{line}: undeclared identifier {name}")]
    Undeclared { file: String, line: u32, name: String },
}
