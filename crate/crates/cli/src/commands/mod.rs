pub mod gen;
pub mod measure;
pub mod preq;
pub mod sweep;

use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::args::{Cli, Command};
use crate::CliResult;

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    let config = cli.config.as_deref();
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Gen { generator } => gen::run(generator, config, out),
        Command::Measure(args) => measure::run(args, config, out),
        Command::Sweep(args) => sweep::run(args, config, out),
        Command::Preq(args) => preq::run(args, config, out),
    }
}

/// Writes pretty JSON with a trailing newline.
pub fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| crate::Failure::format(e.to_string()))?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

pub fn read_json(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| crate::Failure::format(format!("{}: {e}", path.display())))
}
