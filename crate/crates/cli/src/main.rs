//! `gradfit` command-line driver.
//!
//! Exit codes: 0 on success, 1 on numerical failure, 2 on usage errors
//! (bad flags, unreadable or malformed input files).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(gradfit::Error),
}

impl From<gradfit::Error> for CliError {
    fn from(e: gradfit::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use gradfit::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(E::Parameter(_) | E::Syntax { .. } | E::Format { .. } | E::Io(_)) => 2,
            CliError::Core(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

/// Moves `--config PATH` out of `argv` and splices the file's settings in
/// right after the subcommand, ahead of explicit flags.
fn expand_config(mut argv: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut path = None;
    let mut i = 1;
    while i < argv.len() {
        if argv[i] == "--config" {
            if i + 1 >= argv.len() {
                return Err(CliError::Usage("--config needs a path".into()));
            }
            path = Some(argv.remove(i + 1));
            argv.remove(i);
        } else if let Some(p) = argv[i].strip_prefix("--config=") {
            path = Some(p.to_owned());
            argv.remove(i);
        } else {
            i += 1;
        }
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{path}:{}: expected `key = value`", n + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        match value {
            "true" => extra.push(format!("--{key}")),
            "false" => {}
            _ => extra.push(format!("--{key}={value}")),
        }
    }
    let at = 2.min(argv.len());
    argv.splice(at..at, extra);
    Ok(argv)
}

fn run(argv: Vec<String>) -> Result<(), CliError> {
    let argv = expand_config(argv)?;
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let invocation = std::iter::once("gradfit")
        .chain(argv.iter().skip(1).map(String::as_str))
        .map(|a| if a.contains(char::is_whitespace) { format!("'{a}'") } else { a.to_owned() })
        .collect::<Vec<_>>()
        .join(" ");
    match &cli.command {
        Command::Compare(a) => commands::compare(a, &invocation),
        Command::Fit(a) => commands::fit(a, &invocation),
        Command::Eval(a) => commands::eval(a, &invocation),
        Command::Sample(a) => commands::sample(a, &invocation),
        Command::Field(a) => commands::field(a, &invocation),
        Command::Dc(a) => commands::dc(a, &invocation),
        Command::Dae(a) => commands::dae(a, &invocation),
        Command::Stats(a) => commands::stats(a, &invocation),
    }
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gradfit: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
