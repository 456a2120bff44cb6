mod commands;
mod load;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Type-check, run and analyse session-typed processes with secrecy levels.
#[derive(Parser, Debug)]
#[command(name = "sessionflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Source file (`.sp`).
    pub file: PathBuf,
    /// Declaration to use; repeat for commands that take two.
    #[arg(long = "decl", value_name = "NAME")]
    pub decls: Vec<String>,
    /// Emit a JSON report.
    #[arg(long)]
    pub json: bool,
    /// Include derivations, witness traces and notes.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Args, Debug, Clone)]
pub struct Observer {
    /// Observer secrecy level.
    #[arg(long, value_name = "LEVEL")]
    pub observer: String,
}

#[derive(Args, Debug, Clone)]
pub struct Contexts {
    /// File of closing contexts; `X_1`/`X_2` pair up, any other context is
    /// used on both sides.
    #[arg(long, value_name = "FILE", conflicts_with = "enumerate")]
    pub contexts: Option<PathBuf>,
    /// Enumerate closing contexts with selections up to this depth.
    #[arg(long, value_name = "N")]
    pub enumerate: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Type-check every declaration, or the named ones.
    Check {
        #[command(flatten)]
        common: Common,
    },
    /// Run a closed declaration.
    Reduce {
        #[command(flatten)]
        common: Common,
        /// Stop after N steps, taking the first redex each time.
        #[arg(long, value_name = "N", conflicts_with = "all_states")]
        steps: Option<usize>,
        /// Print every reachable state instead of one run.
        #[arg(long)]
        all_states: bool,
    },
    /// Print the normal form of a declaration.
    Nf {
        #[command(flatten)]
        common: Common,
    },
    /// Print the relevant nodes, binders and form of a declaration.
    Relevant {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        observer: Observer,
    },
    /// Decide observable equivalence of two declarations.
    Obseq {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        observer: Observer,
    },
    /// Decide the term relation of two declarations in each context pair.
    Relate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        observer: Observer,
        #[command(flatten)]
        contexts: Contexts,
    },
    /// Decide deadlock-sensitive noninterference; the second declaration
    /// defaults to the first.
    Dsni {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        observer: Observer,
        #[command(flatten)]
        contexts: Contexts,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Check { common } => commands::check(&common),
        Command::Reduce { common, steps, all_states } => commands::reduce(&common, steps, all_states),
        Command::Nf { common } => commands::nf(&common),
        Command::Relevant { common, observer } => commands::relevant(&common, &observer),
        Command::Obseq { common, observer } => commands::obseq(&common, &observer),
        Command::Relate { common, observer, contexts } => commands::relate(&common, &observer, &contexts),
        Command::Dsni { common, observer, contexts } => commands::dsni(&common, &observer, &contexts),
    };
    match outcome {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("{}", e.render());
            ExitCode::from(e.code())
        }
    }
}
