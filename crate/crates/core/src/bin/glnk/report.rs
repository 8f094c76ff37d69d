use std::io::Write;
use std::process::ExitCode;

use serde::Serialize;
use serde_json::{json, Value};

use gln_kloosterman::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Warn,
    Fail,
    ResourceExceeded,
}

/// One output line.
#[derive(Serialize)]
pub struct Record {
    pub command: String,
    pub parameters: Value,
    pub anchor: String,
    pub status: Status,
    pub payload: Value,
    pub seed: Option<u64>,
    pub version: &'static str,
}

impl Record {
    pub fn new(command: &str, parameters: Value, anchor: &str, status: Status, payload: Value) -> Self {
        Record {
            command: command.to_string(),
            parameters,
            anchor: anchor.to_string(),
            status,
            payload,
            seed: None,
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Record for an error raised while producing `anchor`.
    pub fn from_error(command: &str, parameters: Value, anchor: &str, e: &Error) -> Self {
        let status = match e {
            Error::ResourceExceeded { .. } => Status::ResourceExceeded,
            _ => Status::Fail,
        };
        Record::new(command, parameters, anchor, status, json!({ "error": e.to_string() }))
    }
}

pub struct CliError {
    pub error: Error,
    pub partial: Vec<Record>,
}

impl From<Error> for CliError {
    fn from(error: Error) -> Self {
        CliError { error, partial: Vec::new() }
    }
}

pub type Outcome = Result<Vec<Record>, CliError>;

fn print(records: &[Record]) {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for r in records {
        let line = serde_json::to_string(r).expect("records serialize");
        let _ = writeln!(out, "{line}");
    }
    let _ = out.flush();
}

/// Print the records and map them to an exit code: 0 pass, 1 fail, 2 usage, 3 resource.
pub fn emit(command: &str, result: Outcome) -> ExitCode {
    match result {
        Ok(records) => {
            print(&records);
            if records.iter().any(|r| r.status == Status::Fail) {
                ExitCode::from(1)
            } else if records.iter().any(|r| r.status == Status::ResourceExceeded) {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(CliError { error, partial }) => {
            print(&partial);
            match error {
                Error::ResourceExceeded { .. } => {
                    print(&[Record::from_error(command, Value::Null, command, &error)]);
                    ExitCode::from(3)
                }
                Error::Integrity(_) => {
                    print(&[Record::from_error(command, Value::Null, command, &error)]);
                    ExitCode::from(1)
                }
                _ => {
                    eprintln!("glnk {command}: {error}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
