//! Distance of an execution to the crash being reproduced.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sutlang::{CrashReport, ExecutionResult, Frame, Program, CONSTRUCTOR};

/// Fitness of a test that could not be built at all.
pub const WORST_FITNESS: f64 = 6.0;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TargetError {
    #[error("target class {0} is not part of the program")]
    UnknownClass(String),
    #[error("target method {class}.{method} does not exist")]
    UnknownMethod { class: String, method: String },
    #[error("line {line} is not a statement of {class}.{method}")]
    UnknownLine { class: String, method: String, line: u32 },
}

/// The frame a search aims at, resolved against the program.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrashTarget {
    pub crash: CrashReport,
    pub class: String,
    /// `<init>` when the target frame is a constructor.
    pub method: String,
    pub line: u32,
}

impl CrashTarget {
    pub fn new(program: &Program, crash: CrashReport) -> Result<Self, TargetError> {
        let frame = crash.target_frame().clone();
        let class = program
            .class(&frame.class)
            .ok_or_else(|| TargetError::UnknownClass(frame.class.clone()))?;
        if class.member_named(&frame.method).next().is_none() {
            return Err(TargetError::UnknownMethod {
                class: frame.class,
                method: frame.method,
            });
        }
        if !program.has_line(&frame.class, &frame.method, frame.line) {
            return Err(TargetError::UnknownLine {
                class: frame.class,
                method: frame.method,
                line: frame.line,
            });
        }
        Ok(Self {
            crash,
            class: frame.class,
            method: frame.method,
            line: frame.line,
        })
    }

    pub fn is_constructor(&self) -> bool {
        self.method == CONSTRUCTOR
    }

    pub fn required_frames(&self) -> &[Frame] {
        self.crash.required_frames()
    }

    pub fn level(&self) -> usize {
        self.crash.target_frame_level
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessBreakdown {
    #[serde(rename = "d_l")]
    pub line: f64,
    #[serde(rename = "d_e")]
    pub exception: f64,
    #[serde(rename = "d_s")]
    pub stack: f64,
    pub total: f64,
}

impl FitnessBreakdown {
    pub fn new(line: f64, exception: f64, stack: f64) -> Self {
        Self {
            line,
            exception,
            stack,
            total: 3.0 * line + 2.0 * exception + stack,
        }
    }

    /// Score of a test that was never built.
    pub fn worst() -> Self {
        Self::new(1.0, 1.0, 1.0)
    }

    pub fn is_reproduction(&self) -> bool {
        self.total == 0.0
    }
}

fn normalized(gap: u32) -> f64 {
    let g = gap as f64;
    g / (g + 1.0)
}

/// 0 if the target line ran; `g/(g+1)` if only other lines of the target
/// method ran, `g` being the smallest line gap; 1 otherwise.
pub fn line_distance(result: &ExecutionResult, target: &CrashTarget) -> f64 {
    let mut nearest: Option<u32> = None;
    for hit in &result.executed_lines {
        if *hit.class == *target.class && *hit.method == *target.method {
            let gap = hit.line.abs_diff(target.line);
            if gap == 0 {
                return 0.0;
            }
            nearest = Some(nearest.map_or(gap, |n| n.min(gap)));
        }
    }
    nearest.map_or(1.0, normalized)
}

/// 0 if the target line ran and the crash exception was thrown with the
/// target frame at its expected depth; 1 otherwise.
pub fn exception_distance(result: &ExecutionResult, target: &CrashTarget, line: f64) -> f64 {
    if line > 0.0 {
        return 1.0;
    }
    let Some(thrown) = &result.thrown else {
        return 1.0;
    };
    let expected = target.crash.target_frame();
    let matches = thrown.exception == target.crash.exception
        && thrown
            .frames
            .get(target.level() - 1)
            .is_some_and(|f| f.same_location(expected));
    if matches {
        0.0
    } else {
        1.0
    }
}

/// Mean per-frame distance over the required frames: 1 for a missing frame
/// or a class/method mismatch, `g/(g+1)` for a line gap `g`.
pub fn stack_distance(result: &ExecutionResult, target: &CrashTarget, exception: f64) -> f64 {
    if exception > 0.0 {
        return 1.0;
    }
    let Some(thrown) = &result.thrown else {
        return 1.0;
    };
    let required = target.required_frames();
    let sum: f64 = required
        .iter()
        .enumerate()
        .map(|(i, want)| match thrown.frames.get(i) {
            Some(got) if got.class == want.class && got.method == want.method => normalized(got.line.abs_diff(want.line)),
            _ => 1.0,
        })
        .sum();
    sum / required.len() as f64
}

pub fn fitness(result: &ExecutionResult, target: &CrashTarget) -> FitnessBreakdown {
    let line = line_distance(result, target);
    let exception = exception_distance(result, target, line);
    let stack = stack_distance(result, target, exception);
    FitnessBreakdown::new(line, exception, stack)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sutlang::interp::{LineHit, Thrown};
    use crate::sutlang::{parse_program, parse_stack_trace, SourceFile};

    const SRC: &str = "\
class Inner {
  def touch(int x) {
    let a = 1;
    let b = 2;
    if (x > 0) {
      throw Boom();
    }
  }
}
class Outer {
  def run(Inner i) {
    i.touch(1);
    i.touch(2);
  }
}
";

    fn program() -> Program {
        parse_program(&[SourceFile::new("f.sut", SRC)]).unwrap()
    }

    fn target(level: usize) -> CrashTarget {
        let crash = parse_stack_trace("Boom\n\tat Inner.touch(f.sut:6)\n\tat Outer.run(f.sut:12)\n", level).unwrap();
        CrashTarget::new(&program(), crash).unwrap()
    }

    fn hit(class: &str, method: &str, line: u32) -> LineHit {
        LineHit {
            class: class.into(),
            method: method.into(),
            line,
        }
    }

    fn frame(class: &str, method: &str, line: u32) -> Frame {
        Frame {
            class: class.into(),
            method: method.into(),
            file: "f.sut".into(),
            line,
        }
    }

    fn result(lines: Vec<LineHit>, thrown: Option<(&str, Vec<Frame>)>) -> ExecutionResult {
        ExecutionResult {
            executed_lines: lines,
            call_events: Vec::new(),
            thrown: thrown.map(|(e, frames)| Thrown {
                exception: e.into(),
                message: None,
                frames,
            }),
            steps: 0,
            statements_started: 0,
            evaluations: 1,
        }
    }

    #[test]
    fn target_must_exist() {
        let p = program();
        let bad_line = parse_stack_trace("Boom\n\tat Inner.touch(f.sut:2)\n", 1).unwrap();
        assert!(matches!(CrashTarget::new(&p, bad_line), Err(TargetError::UnknownLine { .. })));
        let bad_class = parse_stack_trace("Boom\n\tat Nope.touch(f.sut:6)\n", 1).unwrap();
        assert!(matches!(CrashTarget::new(&p, bad_class), Err(TargetError::UnknownClass(_))));
    }

    #[test]
    fn line_distance_cases() {
        let t = target(1);
        assert_eq!(line_distance(&result(vec![hit("Inner", "touch", 6)], None), &t), 0.0);
        assert_eq!(
            line_distance(&result(vec![hit("Inner", "touch", 3), hit("Inner", "touch", 4)], None), &t),
            2.0 / 3.0
        );
        assert_eq!(line_distance(&result(vec![hit("Outer", "run", 6)], None), &t), 1.0);
    }

    #[test]
    fn exception_distance_cases() {
        let t = target(1);
        let good = result(vec![hit("Inner", "touch", 6)], Some(("Boom", vec![frame("Inner", "touch", 6)])));
        assert_eq!(exception_distance(&good, &t, 0.0), 0.0);
        let wrong_line = result(vec![hit("Inner", "touch", 6)], Some(("Boom", vec![frame("Inner", "touch", 5)])));
        assert_eq!(exception_distance(&wrong_line, &t, 0.0), 1.0);
        assert_eq!(exception_distance(&good, &t, 0.5), 1.0);
    }

    #[test]
    fn stack_distance_cases() {
        let t = target(2);
        let exact = result(
            vec![hit("Inner", "touch", 6)],
            Some(("Boom", vec![frame("Inner", "touch", 6), frame("Outer", "run", 12)])),
        );
        assert_eq!(stack_distance(&exact, &t, 0.0), 0.0);
        let off_by_one = result(
            vec![hit("Inner", "touch", 6)],
            Some(("Boom", vec![frame("Inner", "touch", 6), frame("Outer", "run", 13)])),
        );
        assert_eq!(stack_distance(&off_by_one, &t, 0.0), 0.25);
        let shallow = result(vec![hit("Inner", "touch", 6)], Some(("Boom", vec![frame("Inner", "touch", 6)])));
        assert_eq!(stack_distance(&shallow, &t, 0.0), 0.5);
        assert_eq!(stack_distance(&exact, &t, 1.0), 1.0);
    }

    #[test]
    fn totals() {
        let t = target(1);
        let reproduced = result(vec![hit("Inner", "touch", 6)], Some(("Boom", vec![frame("Inner", "touch", 6)])));
        assert_eq!(fitness(&reproduced, &t).total, 0.0);
        assert_eq!(FitnessBreakdown::worst().total, WORST_FITNESS);
        let wrong_exception = result(
            vec![hit("Inner", "touch", 6)],
            Some(("NullDereference", vec![frame("Inner", "touch", 6)])),
        );
        assert_eq!(fitness(&wrong_exception, &t).total, 3.0);
    }

    #[test]
    fn reaching_the_line_never_hurts() {
        let t = target(1);
        let without = result(vec![hit("Inner", "touch", 3)], None);
        let with = result(vec![hit("Inner", "touch", 3), hit("Inner", "touch", 6)], None);
        assert!(fitness(&with, &t).total < fitness(&without, &t).total);
    }
}
