use std::collections::BTreeMap;
use std::fs;
use std::io::ErrorKind;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub mod exit {
    pub const OK: i32 = 0;
    pub const NEGATIVE: i32 = 1;
    pub const INCONCLUSIVE: i32 = 2;
    pub const USAGE: i32 = 64;
    pub const NO_INPUT: i32 = 66;
    pub const SOFTWARE: i32 = 70;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: exit::USAGE,
            message: message.into(),
        }
    }

    pub fn software(message: impl Into<String>) -> Self {
        Self {
            code: exit::SOFTWARE,
            message: message.into(),
        }
    }
}

impl From<corrgeom::Error> for Failure {
    fn from(e: corrgeom::Error) -> Self {
        use corrgeom::Error::*;
        let code = match e {
            NumericalFailure(_) | DegenerateSystem | AmbiguousSeaCut { .. } => exit::SOFTWARE,
            _ => exit::USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

pub type CmdResult<T> = std::result::Result<T, Failure>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &str, bytes: &[u8]) -> Self {
        Self {
            path: path.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

/// Record of one invocation. Everything except `wall_time_s` is a function
/// of the inputs, flags and seed.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub inputs: Vec<FileDigest>,
    pub parameters: BTreeMap<String, Value>,
    pub outputs: Vec<FileDigest>,
    pub seed: u64,
    pub verdicts: Vec<Value>,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_time_s: f64,
}

/// Inputs, parameters and verdicts collected while a command runs.
#[derive(Debug, Default)]
pub struct Run {
    pub inputs: Vec<FileDigest>,
    pub parameters: BTreeMap<String, Value>,
    pub verdicts: Vec<Value>,
}

impl Run {
    pub fn param(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.parameters.insert(key.to_string(), v);
    }

    pub fn verdict(&mut self, value: impl Serialize) {
        if let Ok(v) = serde_json::to_value(value) {
            self.verdicts.push(v);
        }
    }

    pub fn read(&mut self, path: &Path) -> CmdResult<String> {
        let bytes = fs::read(path).map_err(|e| Failure {
            code: exit::NO_INPUT,
            message: match e.kind() {
                ErrorKind::NotFound => format!("{}: no such file", path.display()),
                _ => format!("{}: {e}", path.display()),
            },
        })?;
        self.inputs.push(FileDigest::of(&path.display().to_string(), &bytes));
        String::from_utf8(bytes).map_err(|_| Failure::usage(format!("{}: not valid UTF-8", path.display())))
    }
}

/// What a successful command produced: its exit code and primary payload.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub payload: String,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}
