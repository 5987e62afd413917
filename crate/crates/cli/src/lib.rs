//! Command-line front end: every analysis as a subcommand, figures as data files.

pub mod args;
pub mod commands;
pub mod config;
pub mod figures;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use args::Cli;
use commands::{execute, CliError, Outcome};
use output::pretty;

/// Parses `argv` (program name first), runs the command and returns the exit code:
/// 0 on success, 1 on usage errors, 2 on numerical failures.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match config::merge_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli.command).and_then(|out| emit(&cli, out)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn emit(cli: &Cli, out: Outcome) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    match out {
        Outcome::Report(v) => stdout.write_all(pretty(&v).as_bytes())?,
        Outcome::Files { tables, json } => {
            for t in &tables {
                writeln!(stdout, "{}", t.write(&cli.out_dir, cli.format)?.display())?;
            }
            for (name, v) in &json {
                std::fs::create_dir_all(&cli.out_dir)?;
                let path = cli.out_dir.join(format!("{name}.json"));
                std::fs::write(&path, pretty(v))?;
                writeln!(stdout, "{}", path.display())?;
            }
        }
    }
    Ok(())
}
