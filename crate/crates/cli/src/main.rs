mod args;
mod commands;
mod render;

use std::process::ExitCode;

use clap::error::ErrorKind as ClapKind;
use clap::Parser;
use mrcp_core::{Error, ErrorKind};

use args::{Cli, Command};

/// Exit status and diagnostic tag for each error class.
fn code(kind: ErrorKind) -> (u8, &'static str) {
    match kind {
        ErrorKind::Config => (1, "config"),
        ErrorKind::Data => (2, "data"),
        ErrorKind::Numeric => (3, "numeric"),
    }
}

/// One line on stderr: `error kind=<tag> exit=<n> message=<json string>`.
fn fail(kind: ErrorKind, message: &str) -> ExitCode {
    let (status, tag) = code(kind);
    let message = serde_json::to_string(message).expect("strings serialise");
    eprintln!("error kind={tag} exit={status} message={message}");
    ExitCode::from(status)
}

fn run(cli: Cli) -> mrcp_core::Result<String> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Validate { manifest } => commands::validate(&manifest),
        Command::Onset {
            manifest,
            out,
            apply,
        } => commands::onset(&manifest, &out, apply),
        Command::Eval {
            manifest,
            pipeline,
            out,
        } => commands::eval(&manifest, &pipeline, &out),
        Command::SweepP {
            manifest,
            pipeline,
            ps,
            out,
        } => commands::sweep(&manifest, &pipeline, ps.as_deref(), &out),
        Command::Pairwise {
            manifest,
            pipeline,
            out,
        } => commands::pairwise_cmd(&manifest, &pipeline, &out),
        Command::Synth { spec, seed, out } => commands::synth(spec.as_deref(), seed, &out),
        Command::Report { report, out } => commands::report(&report, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ClapKind::DisplayHelp | ClapKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e)
            if matches!(
                e.kind(),
                ClapKind::DisplayHelpOnMissingArgumentOrSubcommand | ClapKind::MissingSubcommand
            ) =>
        {
            return fail(ErrorKind::Config, "a subcommand is required, see --help");
        }
        Err(e) => {
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            return fail(ErrorKind::Config, first.trim_start_matches("error: "));
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
