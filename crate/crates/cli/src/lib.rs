//! `repcomp` command-line front end.
//!
//! Subcommands: `gen` (synthetic datasets with sidecar metadata), `measure`
//! (C(Z), C^L(Z) and topological similarity of a dataset), `sweep` (grids
//! of generator runs to CSV) and `preq` (prequential curves to CSV).

pub mod args;
pub mod commands;
pub mod settings;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::Parser;
use sha2::{Digest, Sha256};

pub use args::Cli;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FORMAT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Error with the process exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    pub fn format(message: impl Into<String>) -> Self {
        Self { code: EXIT_FORMAT, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<repcomp::Error> for Failure {
    fn from(e: repcomp::Error) -> Self {
        use repcomp::Error as E;
        let code = match &e {
            E::InvalidParameter(_) => EXIT_USAGE,
            E::Contract(_) | E::TokenOutOfRange { .. } | E::NoParse(_) | E::Format { .. } | E::Io(_) => EXIT_FORMAT,
            E::NumericalRange(_)
            | E::Degenerate(_)
            | E::UndefinedCorrelation(_)
            | E::NonFinite(_)
            | E::TrainingDiverged { .. } => EXIT_NUMERICAL,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::format(e.to_string())
    }
}

pub type CliResult<T> = Result<T, Failure>;

/// Parses `args` and runs the command, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match commands::dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

/// Hex SHA-256 of a JSON value's canonical text.
pub fn config_hash(value: &serde_json::Value) -> String {
    let digest = Sha256::digest(value.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Output directory from `--out`, created if missing.
pub fn out_dir(out: Option<&Path>) -> CliResult<PathBuf> {
    let dir = out.ok_or_else(|| Failure::usage("--out <DIR> is required for this command"))?;
    std::fs::create_dir_all(dir)?;
    Ok(dir.to_path_buf())
}
