//! Running artifacts against a system under test.
//!
//! The wire protocol is one artifact per process: the text plus a single
//! trailing newline on stdin (or in a file named by the last argument), the
//! result as the last non-empty line of stdout. A nonzero exit is a crash.

use std::fmt;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::Duration;

use serde::Serialize;
use thiserror::Error;
use wait_timeout::ChildExt;

use crate::artifact::TestArtifact;
use crate::semantics::SemValue;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputMode {
    #[default]
    Stdin,
    FileArg,
}

/// How a real-valued expectation is compared.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompareMode {
    /// Relative tolerance of 1e-9.
    #[default]
    Tolerant,
    /// Equal after rounding both sides to cents.
    Currency,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SutSpec {
    pub command: Vec<String>,
    pub input_mode: InputMode,
    pub timeout: Duration,
    pub serial: bool,
    pub compare: CompareMode,
}

impl SutSpec {
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

    pub fn new(command: Vec<String>) -> Self {
        SutSpec {
            command,
            input_mode: InputMode::Stdin,
            timeout: Self::DEFAULT_TIMEOUT,
            serial: false,
            compare: CompareMode::Tolerant,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureClass {
    OracleMismatch,
    SutCrash,
    SutTimeout,
}

impl fmt::Display for FailureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureClass::OracleMismatch => "oracle-mismatch",
            FailureClass::SutCrash => "sut-crash",
            FailureClass::SutTimeout => "sut-timeout",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Pass,
    OracleMismatch {
        actual: String,
        expected: SemValue,
    },
    /// Exit status, absent when the process died by a signal.
    SutCrash(Option<i32>),
    SutTimeout,
}

impl Verdict {
    pub fn failure_class(&self) -> Option<FailureClass> {
        match self {
            Verdict::Pass => None,
            Verdict::OracleMismatch { .. } => Some(FailureClass::OracleMismatch),
            Verdict::SutCrash(_) => Some(FailureClass::SutCrash),
            Verdict::SutTimeout => Some(FailureClass::SutTimeout),
        }
    }

    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn actual(&self) -> Option<&str> {
        match self {
            Verdict::OracleMismatch { actual, .. } => Some(actual),
            _ => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => f.write_str("pass"),
            Verdict::OracleMismatch { .. } => f.write_str("oracle-mismatch"),
            Verdict::SutCrash(Some(code)) => write!(f, "sut-crash({code})"),
            Verdict::SutCrash(None) => f.write_str("sut-crash(signal)"),
            Verdict::SutTimeout => f.write_str("sut-timeout"),
        }
    }
}

/// Problems running the SUT at all. Never a verdict.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("empty SUT command")]
    EmptyCommand,
    #[error("cannot start `{program}`: {source}")]
    Spawn { program: String, source: io::Error },
    #[error("SUT i/o: {0}")]
    Io(#[from] io::Error),
}

/// Something that can decide whether a text with a given oracle fails.
pub trait FailureChecker {
    fn check(&self, text: &str, oracle: &SemValue) -> Result<Verdict, HarnessError>;
}

impl FailureChecker for SutSpec {
    fn check(&self, text: &str, oracle: &SemValue) -> Result<Verdict, HarnessError> {
        run_text(self, text, oracle)
    }
}

impl<T: FailureChecker + ?Sized> FailureChecker for &T {
    fn check(&self, text: &str, oracle: &SemValue) -> Result<Verdict, HarnessError> {
        (**self).check(text, oracle)
    }
}

/// A SUT implemented as a function: `Ok(stdout)` or `Err(exit code)`.
pub struct InProcessSut<F> {
    run: F,
    compare: CompareMode,
}

impl<F: Fn(&str) -> Result<String, i32>> InProcessSut<F> {
    pub fn new(run: F) -> Self {
        InProcessSut {
            run,
            compare: CompareMode::Tolerant,
        }
    }

    pub fn with_compare(mut self, compare: CompareMode) -> Self {
        self.compare = compare;
        self
    }
}

impl<F: Fn(&str) -> Result<String, i32>> FailureChecker for InProcessSut<F> {
    fn check(&self, text: &str, oracle: &SemValue) -> Result<Verdict, HarnessError> {
        let input = format!("{text}\n");
        Ok(match (self.run)(&input) {
            Ok(out) => judge(&out, oracle, self.compare),
            Err(code) => Verdict::SutCrash(Some(code)),
        })
    }
}

pub fn run_one(sut: &SutSpec, artifact: &TestArtifact) -> Result<Verdict, HarnessError> {
    run_text(sut, &artifact.text, &artifact.oracle)
}

/// Run `text` through the SUT process and judge its output against `expected`.
pub fn run_text(sut: &SutSpec, text: &str, expected: &SemValue) -> Result<Verdict, HarnessError> {
    let (program, args) = sut
        .command
        .split_first()
        .ok_or(HarnessError::EmptyCommand)?;
    let input = format!("{text}\n");
    let mut cmd = Command::new(program);
    cmd.args(args).stdout(Stdio::piped()).stderr(Stdio::null());
    let scratch = match sut.input_mode {
        InputMode::Stdin => {
            cmd.stdin(Stdio::piped());
            None
        }
        InputMode::FileArg => {
            let file = ScratchFile::create(&input)?;
            cmd.arg(&file.0).stdin(Stdio::null());
            Some(file)
        }
    };
    let mut child = cmd.spawn().map_err(|source| HarnessError::Spawn {
        program: program.clone(),
        source,
    })?;

    let feeder = child.stdin.take().map(|mut stdin| {
        thread::spawn(move || {
            // a SUT may exit without reading; a broken pipe is not our failure
            let _ = stdin.write_all(input.as_bytes());
        })
    });
    let mut stdout = child.stdout.take().expect("stdout piped");
    let reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stdout.read_to_end(&mut buf);
        buf
    });

    let status = match child.wait_timeout(sut.timeout)? {
        Some(status) => status,
        None => {
            let _ = child.kill();
            child.wait()?;
            // grandchildren may still hold stdout open; leave the reader detached
            drop(reader);
            drop(scratch);
            return Ok(Verdict::SutTimeout);
        }
    };
    if let Some(feeder) = feeder {
        let _ = feeder.join();
    }
    let out = reader.join().unwrap_or_default();
    drop(scratch);
    if !status.success() {
        return Ok(Verdict::SutCrash(status.code()));
    }
    Ok(judge(&String::from_utf8_lossy(&out), expected, sut.compare))
}

fn judge(stdout: &str, expected: &SemValue, mode: CompareMode) -> Verdict {
    let actual = last_line(stdout);
    if consistent(actual, expected, mode) {
        Verdict::Pass
    } else {
        Verdict::OracleMismatch {
            actual: actual.to_string(),
            expected: expected.clone(),
        }
    }
}

/// The last non-empty line, trimmed.
pub fn last_line(stdout: &str) -> &str {
    stdout
        .lines()
        .map(str::trim)
        .rev()
        .find(|l| !l.is_empty())
        .unwrap_or("")
}

/// Does the SUT's `actual` output agree with the expected value?
pub fn consistent(actual: &str, expected: &SemValue, mode: CompareMode) -> bool {
    let actual = actual.trim();
    match expected {
        SemValue::Int(e) | SemValue::Wide(e) => actual.parse::<i64>().is_ok_and(|a| a == *e),
        SemValue::Real(e) => {
            let Ok(a) = actual.trim_start_matches('$').parse::<f64>() else {
                return false;
            };
            match mode {
                CompareMode::Tolerant => (a - e).abs() <= f64::max(1e-9, 1e-9 * e.abs()),
                CompareMode::Currency => (a * 100.0).round() == (e * 100.0).round(),
            }
        }
        SemValue::Text(e) => actual == e.trim(),
        SemValue::Bool(e) => actual == if *e { "true" } else { "false" },
    }
}

/// A uniquely named temp file removed on drop.
struct ScratchFile(PathBuf);

impl ScratchFile {
    fn create(contents: &str) -> io::Result<Self> {
        static NEXT: AtomicU64 = AtomicU64::new(0);
        let n = NEXT.fetch_add(1, Ordering::Relaxed);
        let path = std::env::temp_dir().join(format!("gramtao-{}-{n}.txt", std::process::id()));
        std::fs::write(&path, contents)?;
        Ok(ScratchFile(path))
    }
}

impl Drop for ScratchFile {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consistency() {
        use CompareMode::*;
        assert!(consistent("12", &SemValue::Int(12), Tolerant));
        assert!(!consistent("-4", &SemValue::Int(12), Tolerant));
        assert!(!consistent("twelve", &SemValue::Int(12), Tolerant));
        assert!(consistent("24.00", &SemValue::Real(24.0), Currency));
        assert!(consistent("$24.004", &SemValue::Real(24.0), Currency));
        assert!(!consistent("24.01", &SemValue::Real(24.0), Currency));
        assert!(consistent(
            "0.30000000000000004",
            &SemValue::Real(0.3),
            Tolerant
        ));
        assert!(!consistent("0.3001", &SemValue::Real(0.3), Tolerant));
        assert!(consistent(
            " $1.00 $2.00 ",
            &SemValue::Text("$1.00 $2.00".into()),
            Tolerant
        ));
        assert!(consistent("true", &SemValue::Bool(true), Tolerant));
    }

    #[test]
    fn last_line_wins() {
        assert_eq!(last_line("debug\n12\n\n  \n"), "12");
        assert_eq!(last_line(""), "");
    }

    #[test]
    fn in_process_checker() {
        let sut = InProcessSut::new(|s: &str| Ok(s.trim().to_string()));
        assert_eq!(sut.check("12", &SemValue::Int(12)).unwrap(), Verdict::Pass);
        let crash = InProcessSut::new(|_: &str| Err(3));
        assert_eq!(
            crash.check("x", &SemValue::Int(1)).unwrap(),
            Verdict::SutCrash(Some(3))
        );
    }

    #[cfg(unix)]
    #[test]
    fn subprocess_protocol() {
        let sh = |script: &str| SutSpec {
            timeout: Duration::from_millis(500),
            ..SutSpec::new(vec!["sh".into(), "-c".into(), script.into()])
        };
        let echo = sh("cat");
        assert_eq!(
            run_text(&echo, "12", &SemValue::Int(12)).unwrap(),
            Verdict::Pass
        );
        assert_eq!(
            run_text(&sh("echo -4"), "2*(5-3+4)", &SemValue::Int(12)).unwrap(),
            Verdict::OracleMismatch {
                actual: "-4".into(),
                expected: SemValue::Int(12)
            }
        );
        assert_eq!(
            run_text(&sh("exit 3"), "1", &SemValue::Int(1)).unwrap(),
            Verdict::SutCrash(Some(3))
        );
        assert_eq!(
            run_text(&sh("sleep 5"), "1", &SemValue::Int(1)).unwrap(),
            Verdict::SutTimeout
        );
        let file = SutSpec {
            input_mode: InputMode::FileArg,
            ..sh("cat \"$0\"")
        };
        assert_eq!(
            run_text(&file, "7", &SemValue::Int(7)).unwrap(),
            Verdict::Pass
        );
    }

    #[test]
    fn missing_executable_is_infrastructure() {
        let sut = SutSpec::new(vec!["/nonexistent/gramtao-sut".into()]);
        assert!(matches!(
            run_text(&sut, "1", &SemValue::Int(1)),
            Err(HarnessError::Spawn { .. })
        ));
        assert!(matches!(
            run_text(&SutSpec::new(vec![]), "1", &SemValue::Int(1)),
            Err(HarnessError::EmptyCommand)
        ));
    }

    #[cfg(unix)]
    #[test]
    fn large_output_does_not_deadlock() {
        let sut = SutSpec::new(vec![
            "sh".into(),
            "-c".into(),
            "yes 1 | head -n 200000".into(),
        ]);
        assert_eq!(
            run_text(&sut, "1", &SemValue::Int(1)).unwrap(),
            Verdict::Pass
        );
    }
}
