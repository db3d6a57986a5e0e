//! Batch front-end for the engine: a JSON document format, one command per
//! invocation, and deterministic reports.

pub mod commands;
pub mod doc;
pub mod table;

use std::path::{Path, PathBuf};

pub use commands::{execute, Command, Outcome};
pub use doc::{parse_document, to_text, CliError, Document};

pub fn load(path: &Path) -> Result<Document, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_document(&text).map_err(|e| match e {
        CliError::Schema(m) => CliError::Schema(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn run_paths(cmd: &Command, inputs: &[PathBuf], rational: bool) -> Result<Outcome, CliError> {
    let docs = inputs.iter().map(|p| load(p)).collect::<Result<Vec<_>, _>>()?;
    execute(cmd, &docs, rational)
}

/// Runs a job file; also returns the job's `output` path, resolved against
/// the job's directory.
pub fn run_job(path: &Path) -> Result<(Outcome, Option<PathBuf>), CliError> {
    let Document::Job(job) = load(path)? else {
        return Err(CliError::Schema(format!("{}: not a job document", path.display())));
    };
    let (cmd, rational) = commands::parse_job_command(&job)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let inputs: Vec<PathBuf> = job.inputs.iter().map(|i| base.join(i)).collect();
    let out = run_paths(&cmd, &inputs, rational)?;
    Ok((out, job.output.as_ref().map(|o| base.join(o))))
}
