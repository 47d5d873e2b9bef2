//! Process-level error split: bad inputs exit 2, everything else exits 1.

use std::fmt;

#[derive(Debug)]
pub enum Fail {
    /// Rejected configuration, flags, or input files.
    Validation(String),
    /// I/O trouble or an internal failure mid-run.
    Runtime(String),
}

impl Fail {
    pub fn exit_code(&self) -> i32 {
        match self {
            Fail::Validation(_) => 2,
            Fail::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for Fail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fail::Validation(m) | Fail::Runtime(m) => f.write_str(m),
        }
    }
}

pub fn validation(msg: impl Into<String>) -> Fail {
    Fail::Validation(msg.into())
}

pub fn runtime(msg: impl Into<String>) -> Fail {
    Fail::Runtime(msg.into())
}

/// Errors raised while reading or interpreting an input file are the
/// caller's problem (exit 2); pass the file path for context.
pub fn reject_input<E: fmt::Display>(path: &std::path::Path, err: E) -> Fail {
    Fail::Validation(format!("{}: {err}", path.display()))
}

/// Errors raised while producing an output file are ours (exit 1).
pub fn write_failed<E: fmt::Display>(path: &std::path::Path, err: E) -> Fail {
    Fail::Runtime(format!("{}: {err}", path.display()))
}
