//! Command-line front end for `rebo-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod config;
pub mod manifest;
pub mod plot;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

use crate::cli::{Cli, Command};
use crate::commands::Env;
use crate::config::ToolConfig;
use crate::manifest::RunContext;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

fn seed_of(command: &Command) -> Option<u64> {
    use crate::cli::{JuggleCmd, WorkspaceCmd};
    match command {
        Command::Workspace(WorkspaceCmd::Volume { seed, .. }) => Some(*seed),
        Command::Juggle(JuggleCmd::Sim { seed, .. }) => Some(*seed),
        Command::Repro(r) => Some(r.seed),
        _ => None,
    }
}

/// Parses `argv` (including the program name), runs one subcommand and
/// returns the process exit status.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    init_logging(cli.verbose);

    let cfg = match ToolConfig::load(cli.config.as_deref()) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            return EXIT_DOMAIN;
        }
    };
    let ctx = RunContext {
        command_line: argv.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
        config_hash: cfg.hash(),
        seed: seed_of(&cli.command),
    };
    let mut env = Env { cfg: &cfg, ctx, out };
    let result = match cli.command {
        Command::Pattern(c) => commands::pattern(c, &mut env),
        Command::Stiffness(c) => commands::stiffness(c, &mut env),
        Command::Kin(c) => commands::kin(c, &mut env),
        Command::Workspace(c) => commands::workspace(c, &mut env),
        Command::Juggle(c) => commands::juggle(c, &mut env),
        Command::Repro(a) => commands::repro(a, &mut env),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_DOMAIN
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}
