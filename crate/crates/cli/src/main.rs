use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dgtwist_cli::{run_job, run_paths, table, to_text, CliError, Command, Outcome};

#[derive(Parser)]
#[command(name = "dgtwist", version, about = "Twisted complexes, realizations and DG quotients over exact integers")]
struct Cli {
    /// Write the output document here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report ranks over Q instead of groups over Z.
    #[arg(long, global = true)]
    rational: bool,
    /// Seed for randomized property jobs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the DG axioms (and Maurer–Cartan for twisted documents).
    Validate { doc: PathBuf },
    /// Cohomology of the hom complex between two twisted complexes.
    Homs { x: PathBuf, y: PathBuf },
    /// Cone of a closed degree-0 morphism.
    Cone { morphism: PathBuf },
    /// Weight complex over the homotopy category.
    T0 { x: PathBuf },
    /// Image under the hom truncation C → C_N.
    Tn {
        #[arg(long)]
        level: u32,
        x: PathBuf,
    },
    /// Stupid window on slot indices [a, b].
    Window {
        #[arg(long, allow_hyphen_values = true)]
        a: i32,
        #[arg(long, allow_hyphen_values = true)]
        b: i32,
        x: PathBuf,
    },
    /// Spectral sequence of a realization.
    Ss { functor: PathBuf, x: PathBuf },
    /// Realization of a truncated functor.
    Truncated {
        #[arg(long, allow_hyphen_values = true)]
        b: i32,
        #[arg(long = "N")]
        n: u32,
        functor: PathBuf,
        x: PathBuf,
    },
    /// Trace identity for a closed endomorphism.
    Lefschetz { functor: PathBuf, morphism: PathBuf },
    /// Drinfeld quotient by the named objects.
    Quotient {
        #[arg(long, num_args = 1.., required = true)]
        kill: Vec<String>,
        #[arg(long, num_args = 2, allow_hyphen_values = true, value_names = ["LO", "HI"])]
        window: Vec<i32>,
        category: PathBuf,
    },
    /// Euler class in the Grothendieck group.
    Euler { x: PathBuf },
    /// Maurer–Cartan residuals of a twisted complex.
    McCheck { x: PathBuf },
    /// Run a job document.
    Run { job: PathBuf },
    /// Randomized property sweep driven by --seed.
    Check {
        #[arg(long, default_value_t = 20)]
        count: usize,
    },
}

fn dispatch(cli: &Cli) -> Result<(Outcome, Option<PathBuf>), CliError> {
    let (cmd, inputs) = match &cli.command {
        Cmd::Run { job } => return run_job(job),
        Cmd::Validate { doc } => (Command::Validate, vec![doc.clone()]),
        Cmd::Homs { x, y } => (Command::Homs, vec![x.clone(), y.clone()]),
        Cmd::Cone { morphism } => (Command::Cone, vec![morphism.clone()]),
        Cmd::T0 { x } => (Command::T0, vec![x.clone()]),
        Cmd::Tn { level, x } => (Command::Tn { level: *level }, vec![x.clone()]),
        Cmd::Window { a, b, x } => (Command::Window { a: *a, b: *b }, vec![x.clone()]),
        Cmd::Ss { functor, x } => (Command::Ss, vec![functor.clone(), x.clone()]),
        Cmd::Truncated { b, n, functor, x } => (Command::Truncated { b: *b, n: *n }, vec![functor.clone(), x.clone()]),
        Cmd::Lefschetz { functor, morphism } => (Command::Lefschetz, vec![functor.clone(), morphism.clone()]),
        Cmd::Quotient { kill, window, category } => {
            let window = match window.as_slice() {
                [lo, hi] => (*lo, *hi),
                _ => return Err(CliError::Schema("--window takes LO HI".into())),
            };
            (Command::Quotient { kill: kill.clone(), window }, vec![category.clone()])
        }
        Cmd::Euler { x } => (Command::Euler, vec![x.clone()]),
        Cmd::McCheck { x } => (Command::McCheck, vec![x.clone()]),
        Cmd::Check { count } => (Command::Check { seed: cli.seed, count: *count }, Vec::new()),
    };
    Ok((run_paths(&cmd, &inputs, cli.rational)?, None))
}

fn emit(cli: &Cli, doc: &serde_json::Value, job_out: Option<PathBuf>) -> Result<(), CliError> {
    let text = match cli.format {
        Format::Json => to_text(doc),
        Format::Table => table::render(doc),
    };
    match cli.out.clone().or(job_out) {
        Some(p) => std::fs::write(&p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = dispatch(&cli).and_then(|(out, job_out)| emit(&cli, &out.document, job_out).map(|_| out.exit));
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("dgtwist: {e}");
            print!("{}", to_text(&e.to_document()));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
