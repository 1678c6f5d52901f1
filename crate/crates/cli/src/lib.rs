//! `omega` command-line front end: JSON in, JSON report out.
//!
//! Exit codes: 0 success or passing verdict, 1 failing verdict or rejected
//! precondition, 2 usage or malformed input, 3 guard exceeded.

pub mod acceptance;
pub mod bundle;
pub mod commands;
pub mod errors;

use std::collections::BTreeMap;
use std::io;

use clap::Parser;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use errors::{CliError, ErrorKind};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_GUARD: i32 = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// File access for one run; every read is digested into the report.
pub struct Inputs<'a> {
    reader: &'a dyn Fn(&str) -> io::Result<String>,
    digests: Vec<InputDigest>,
}

impl<'a> Inputs<'a> {
    pub fn new(reader: &'a dyn Fn(&str) -> io::Result<String>) -> Self {
        Self { reader, digests: Vec::new() }
    }

    pub fn read(&mut self, path: &str) -> Result<String, CliError> {
        let text = (self.reader)(path).map_err(|e| CliError::new(ErrorKind::Usage, format!("cannot read {path}: {e}")))?;
        self.digests.push(InputDigest { path: path.to_string(), sha256: hex::encode(Sha256::digest(text.as_bytes())) });
        Ok(text)
    }
}

/// What a command hands back: the JSON result and whether its verdict passed.
pub struct CommandOutput {
    pub result: Value,
    pub passed: bool,
    /// Human-readable lines for `--pretty`.
    pub table: Vec<String>,
}

impl CommandOutput {
    pub fn ok(result: Value) -> Self {
        Self { result, passed: true, table: Vec::new() }
    }

    pub fn verdict(result: Value, passed: bool) -> Self {
        Self { result, passed, table: Vec::new() }
    }

    pub fn with_table(mut self, table: Vec<String>) -> Self {
        self.table = table;
        self
    }
}

/// Cap rayon's global pool at `OMEGA_THREADS` when set.
pub fn configure_threads() {
    if let Some(n) = std::env::var("OMEGA_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with_reader(args, &|p: &str| std::fs::read_to_string(p))
}

pub fn run_with_reader<I, T>(args: I, reader: &dyn Fn(&str) -> io::Result<String>) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match commands::Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind as K;
            let text = e.render().to_string();
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand) {
                let code = if e.kind() == K::DisplayHelpOnMissingArgumentOrSubcommand { EXIT_USAGE } else { EXIT_OK };
                return Outcome { code, stdout: text, stderr: String::new() };
            }
            let report = envelope("usage", 0, &[], "error", json!({"kind": ErrorKind::Usage, "message": text.trim()}), "error");
            return Outcome { code: EXIT_USAGE, stdout: report, stderr: text };
        }
    };
    let mut inputs = Inputs::new(reader);
    let name = cli.command.name();
    match commands::execute(&cli, &mut inputs) {
        Ok(out) => {
            let status = if out.passed { "ok" } else { "fail" };
            let stdout = envelope(&name, cli.seed, &inputs.digests, status, out.result, "result");
            let stderr = if cli.pretty { render_table(&name, status, &out.table) } else { String::new() };
            Outcome { code: if out.passed { EXIT_OK } else { EXIT_FAIL }, stdout, stderr }
        }
        Err(e) => {
            let body = json!({"kind": e.kind, "message": e.message});
            let stdout = envelope(&name, cli.seed, &inputs.digests, "error", body, "error");
            let stderr = format!("omega {name}: {}\n", e.message);
            Outcome { code: e.exit_code(), stdout, stderr }
        }
    }
}

fn envelope(command: &str, seed: u64, inputs: &[InputDigest], status: &str, body: Value, key: &str) -> String {
    let mut map = BTreeMap::new();
    map.insert("tool", json!("omega"));
    map.insert("version", json!(VERSION));
    map.insert("command", json!(command));
    map.insert("seed", json!(seed));
    map.insert("inputs", serde_json::to_value(inputs).expect("serializable"));
    map.insert("status", json!(status));
    map.insert(key, body);
    let mut s = serde_json::to_string(&map).expect("serializable");
    s.push('\n');
    s
}

fn render_table(command: &str, status: &str, lines: &[String]) -> String {
    let mut out = format!("omega {command}: {status}\n");
    for l in lines {
        out.push_str("  ");
        out.push_str(l);
        out.push('\n');
    }
    out
}
