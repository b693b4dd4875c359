//! Scenario bundles on disk.
//!
//! ```text
//! scenario/
//!   scenario.toml      optional settings
//!   crash.txt          the stack trace
//!   program/*.sut      internal classes
//!   lib/*.sut          external classes (optional)
//!   tests/*.sut-test   existing tests (optional)
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::search::{CrashTarget, TargetError};
use crate::sutlang::{parse_program, parse_stack_trace, parse_tests, CrashReport, Program, SourceFile, SutError, TestCase, TraceError};

pub const SETTINGS_FILE: &str = "scenario.toml";
pub const CRASH_FILE: &str = "crash.txt";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}: no .sut files under program/")]
    NoProgram(PathBuf),
    #[error("{path}: {source}")]
    Sut {
        path: PathBuf,
        #[source]
        source: SutError,
    },
    #[error("{path}: {source}")]
    Trace {
        path: PathBuf,
        #[source]
        source: TraceError,
    },
    #[error("{path}: {source}")]
    Target {
        path: PathBuf,
        #[source]
        source: TargetError,
    },
    #[error("{path}: {source}")]
    Settings {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("{0}: no scenario bundles found")]
    NoBundles(PathBuf),
}

/// Per-scenario search overrides.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchOverrides {
    pub population: Option<usize>,
    pub budget: Option<u64>,
    pub max_test_length: Option<usize>,
    pub step_limit: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSettings {
    /// Defaults to the directory name.
    pub name: Option<String>,
    pub description: String,
    pub target_frame_level: usize,
    pub search: SearchOverrides,
}

impl Default for ScenarioSettings {
    fn default() -> Self {
        Self {
            name: None,
            description: String::new(),
            target_frame_level: 1,
            search: SearchOverrides::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub dir: PathBuf,
    pub settings: ScenarioSettings,
    pub program: Program,
    pub tests: Vec<TestCase>,
    pub crash: CrashReport,
    pub crash_text: String,
}

fn read(path: &Path) -> Result<String, BundleError> {
    fs::read_to_string(path).map_err(|source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Files in `dir` with the given extension, sorted by name. A missing
/// directory is empty.
fn files_with_extension(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, BundleError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let entries = fs::read_dir(dir).map_err(|source| BundleError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut out: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    out.sort();
    Ok(out)
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Program and tests only; used by commands that do not need the crash.
pub fn load_program(dir: &Path) -> Result<(Program, Vec<TestCase>), BundleError> {
    let mut sources = Vec::new();
    for path in files_with_extension(&dir.join("program"), "sut")? {
        sources.push(SourceFile::new(file_name(&path), read(&path)?));
    }
    if sources.is_empty() {
        return Err(BundleError::NoProgram(dir.to_path_buf()));
    }
    for path in files_with_extension(&dir.join("lib"), "sut")? {
        sources.push(SourceFile::external(file_name(&path), read(&path)?));
    }
    let program = parse_program(&sources).map_err(|source| BundleError::Sut {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut tests = Vec::new();
    for path in files_with_extension(&dir.join("tests"), "sut-test")? {
        let parsed = parse_tests(&file_name(&path), &read(&path)?).map_err(|source| BundleError::Sut {
            path: path.clone(),
            source,
        })?;
        tests.extend(parsed);
    }
    Ok((program, tests))
}

impl Scenario {
    pub fn load(dir: &Path) -> Result<Self, BundleError> {
        let settings_path = dir.join(SETTINGS_FILE);
        let settings: ScenarioSettings = if settings_path.is_file() {
            toml::from_str(&read(&settings_path)?).map_err(|source| BundleError::Settings {
                path: settings_path.clone(),
                source,
            })?
        } else {
            ScenarioSettings::default()
        };
        let (program, tests) = load_program(dir)?;
        let crash_path = dir.join(CRASH_FILE);
        let crash_text = read(&crash_path)?;
        let trace_error = |source| BundleError::Trace {
            path: crash_path.clone(),
            source,
        };
        let crash = parse_stack_trace(&crash_text, settings.target_frame_level).map_err(trace_error)?;
        crash.check_against(&program).map_err(trace_error)?;
        let name = settings.name.clone().unwrap_or_else(|| file_name(dir));
        Ok(Self {
            name,
            dir: dir.to_path_buf(),
            settings,
            program,
            tests,
            crash,
            crash_text,
        })
    }

    /// The crash retargeted at `level`, resolved against the program.
    pub fn target(&self, level: usize) -> Result<CrashTarget, BundleError> {
        let path = self.dir.join(CRASH_FILE);
        let crash = self.crash.with_target_level(level).map_err(|source| BundleError::Trace {
            path: path.clone(),
            source,
        })?;
        CrashTarget::new(&self.program, crash).map_err(|source| BundleError::Target { path, source })
    }
}

/// `path` itself if it is a bundle, else every bundle directly below it.
pub fn discover_bundles(path: &Path) -> Result<Vec<PathBuf>, BundleError> {
    if path.join(CRASH_FILE).is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let entries = fs::read_dir(path).map_err(|source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.join(CRASH_FILE).is_file())
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(BundleError::NoBundles(path.to_path_buf()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, rel: &str, text: &str) {
        let p = dir.join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, text).unwrap();
    }

    #[test]
    fn loads_a_bundle() {
        let tmp = tempfile::tempdir().unwrap();
        let d = tmp.path().join("demo");
        write(&d, "program/a.sut", "class A {\n  def m() {\n    throw Bad();\n  }\n}\n");
        write(&d, "lib/x.sut", "class X { }\n");
        write(&d, "tests/a.sut-test", "test t { a = new A(); }\n");
        write(&d, "crash.txt", "Bad\n\tat A.m(a.sut:3)\n");
        write(&d, "scenario.toml", "description = \"demo\"\n[search]\nbudget = 10\n");
        let s = Scenario::load(&d).unwrap();
        assert_eq!(s.name, "demo");
        assert_eq!(s.settings.search.budget, Some(10));
        assert_eq!(s.tests.len(), 1);
        assert!(s.program.class("X").is_some());
        assert_eq!(s.target(1).unwrap().line, 3);
        assert_eq!(discover_bundles(tmp.path()).unwrap(), vec![d.clone()]);
        assert_eq!(discover_bundles(&d).unwrap(), vec![d]);
    }

    #[test]
    fn missing_crash_is_an_error() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "program/a.sut", "class A { }\n");
        assert!(matches!(Scenario::load(tmp.path()), Err(BundleError::Io { .. })));
        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(load_program(empty.path()), Err(BundleError::NoProgram(_))));
    }

    #[test]
    fn unknown_settings_are_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "program/a.sut", "class A { def m() { } }\n");
        write(tmp.path(), "crash.txt", "Bad\n\tat A.m(a.sut:1)\n");
        write(tmp.path(), "scenario.toml", "budjet = 3\n");
        assert!(matches!(Scenario::load(tmp.path()), Err(BundleError::Settings { .. })));
    }
}
