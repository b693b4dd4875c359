//! Crash stack traces: the `Type: message` + `\tat C.m(File:LINE)` format.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ast::Program;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Frame {
    pub class: String,
    pub method: String,
    pub file: String,
    pub line: u32,
}

impl Frame {
    /// Location equality; the file name is not compared.
    pub fn same_location(&self, other: &Frame) -> bool {
        self.class == other.class && self.method == other.method && self.line == other.line
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "\tat {}.{}({}:{})",
            self.class, self.method, self.file, self.line
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrashReport {
    pub exception: String,
    pub message: Option<String>,
    /// Innermost first.
    pub frames: Vec<Frame>,
    /// 1-based level of the frame the reproduction targets.
    pub target_frame_level: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("stack trace is empty")]
    Empty,
    #[error("malformed stack trace line {line}: {text:?}")]
    Malformed { line: usize, text: String },
    #[error("target frame out of range: {level} not in 1..={frames}")]
    TargetOutOfRange { level: usize, frames: usize },
    #[error("target frame class {0} is not part of the program")]
    UnknownClass(String),
}

impl CrashReport {
    pub fn target_frame(&self) -> &Frame {
        &self.frames[self.target_frame_level - 1]
    }

    /// Frames 1..=target level.
    pub fn required_frames(&self) -> &[Frame] {
        &self.frames[..self.target_frame_level]
    }

    /// Checks that the target frame names a class of `program`.
    pub fn check_against(&self, program: &Program) -> Result<(), TraceError> {
        let class = &self.target_frame().class;
        if program.class(class).is_none() {
            return Err(TraceError::UnknownClass(class.clone()));
        }
        Ok(())
    }

    /// Classes named anywhere in the trace, deduplicated, innermost first.
    pub fn classes(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for f in &self.frames {
            if !out.contains(&f.class.as_str()) {
                out.push(&f.class);
            }
        }
        out
    }

    pub fn with_target_level(&self, level: usize) -> Result<CrashReport, TraceError> {
        if level == 0 || level > self.frames.len() {
            return Err(TraceError::TargetOutOfRange {
                level,
                frames: self.frames.len(),
            });
        }
        Ok(CrashReport {
            target_frame_level: level,
            ..self.clone()
        })
    }
}

/// Renders a trace in the wire format, one frame per line.
pub fn format_stack_trace(report: &CrashReport) -> String {
    format_frames(&report.exception, report.message.as_deref(), &report.frames)
}

pub fn format_frames(exception: &str, message: Option<&str>, frames: &[Frame]) -> String {
    let mut out = String::from(exception);
    if let Some(m) = message {
        out.push_str(": ");
        out.push_str(m);
    }
    out.push('\n');
    for f in frames {
        out.push_str(&f.to_string());
        out.push('\n');
    }
    out
}

pub fn parse_stack_trace(text: &str, target_frame_level: usize) -> Result<CrashReport, TraceError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(TraceError::Empty)?;
    let (exception, message) = match header.split_once(": ") {
        Some((e, m)) => (e, Some(m.to_string())),
        None => (header.strip_suffix(':').unwrap_or(header), None),
    };
    let exception = exception.trim();
    if exception.is_empty() || exception.contains(char::is_whitespace) {
        return Err(TraceError::Malformed {
            line: 1,
            text: header.to_string(),
        });
    }
    let mut frames = Vec::new();
    for (i, line) in lines {
        frames.push(parse_frame(line).ok_or_else(|| TraceError::Malformed {
            line: i + 1,
            text: line.to_string(),
        })?);
    }
    if frames.is_empty() {
        return Err(TraceError::Empty);
    }
    CrashReport {
        exception: exception.to_string(),
        message,
        frames,
        target_frame_level: 1,
    }
    .with_target_level(target_frame_level)
}

fn parse_frame(line: &str) -> Option<Frame> {
    let rest = line.trim_start().strip_prefix("at ")?.trim_end();
    let open = rest.find('(')?;
    let location = rest[open + 1..].strip_suffix(')')?;
    let (qualified, _) = rest.split_at(open);
    let (class, method) = qualified.rsplit_once('.')?;
    let (file, line_no) = location.rsplit_once(':')?;
    let line_no: u32 = line_no.parse().ok()?;
    if class.is_empty() || method.is_empty() || line_no == 0 {
        return None;
    }
    Some(Frame {
        class: class.to_string(),
        method: method.to_string(),
        file: file.to_string(),
        line: line_no,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TWO: &str = "NullDereference\n\tat Inner.touch(Inner.sut:12)\n\tat Outer.run(Outer.sut:40)\n";

    #[test]
    fn two_frames_target_two() {
        let r = parse_stack_trace(TWO, 2).unwrap();
        assert_eq!(r.frames.len(), 2);
        assert_eq!(r.target_frame_level, 2);
        assert_eq!(r.exception, "NullDereference");
        assert_eq!(r.message, None);
        assert_eq!(r.frames[0].line, 12);
        assert_eq!(r.target_frame().class, "Outer");
    }

    #[test]
    fn level_zero_is_out_of_range() {
        let err = parse_stack_trace(TWO, 0).unwrap_err();
        assert_eq!(err, TraceError::TargetOutOfRange { level: 0, frames: 2 });
        assert!(err.to_string().contains("target frame out of range"));
        assert!(parse_stack_trace(TWO, 3).is_err());
    }

    #[test]
    fn three_frames_level_one_keeps_all() {
        let text = "Boom: bad state\n\tat A.<init>(a.sut:3)\n\tat B.m(b.sut:9)\n\tat TestHarness.test(harness:2)\n";
        let r = parse_stack_trace(text, 1).unwrap();
        assert_eq!(r.frames.len(), 3);
        assert_eq!(r.message.as_deref(), Some("bad state"));
        assert_eq!(r.frames[0].method, "<init>");
        assert_eq!(format_stack_trace(&r), text);
    }

    #[test]
    fn malformed_frame_rejected() {
        let err = parse_stack_trace("X\n\tat nowhere\n", 1).unwrap_err();
        assert!(matches!(err, TraceError::Malformed { line: 2, .. }));
    }

    fn ident() -> impl Strategy<Value = String> {
        "[A-Za-z][A-Za-z0-9_]{0,8}"
    }

    prop_compose! {
        fn frame()(class in ident(), method in prop_oneof![ident(), Just("<init>".to_string())],
                   file in "[a-z]{1,6}\\.sut", line in 1u32..10_000) -> Frame {
            Frame { class, method, file, line }
        }
    }

    proptest! {
        #[test]
        fn parse_inverts_format(exception in ident(), message in proptest::option::of("[a-z][a-z ]{0,12}[a-z]"),
                                frames in proptest::collection::vec(frame(), 1..6), pick in 0usize..6) {
            let level = 1 + pick % frames.len();
            let report = CrashReport { exception, message, frames, target_frame_level: level };
            let parsed = parse_stack_trace(&format_stack_trace(&report), level).unwrap();
            prop_assert_eq!(parsed, report);
        }
    }
}
