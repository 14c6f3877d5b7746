//! `swingshot` command-line driver.

mod commands;
mod schema;

use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};

use schema::{keys_for, Cmd, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or settings; exit code 2.
    Usage(String),
    /// Anything that fails while running; exit code 1.
    Runtime(anyhow::Error),
}

impl From<swingshot::Error> for CliError {
    fn from(e: swingshot::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

fn build_cli() -> Command {
    let mut cli = Command::new("swingshot")
        .about("Brachiation learning and planning: point-mass and articulated gibbon policies, references, MPC planner")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for cmd in Cmd::ALL {
        let mut keys_help = String::from("Settings (config file key = value, or the matching flag):\n");
        let mut sub = Command::new(cmd.name()).about(cmd.about()).arg(
            Arg::new("config_file")
                .long("config-file")
                .short('f')
                .value_name("FILE")
                .help("Settings file of `key = value` lines"),
        );
        for key in keys_for(cmd) {
            let default = if key.default.is_empty() { "built-in" } else { key.default };
            keys_help.push_str(&format!("  {:<18} {} [default: {default}]\n", key.name, key.help));
            sub = sub.arg(
                Arg::new(key.name)
                    .long(key.flag())
                    .value_name(key.placeholder())
                    .help(key.help)
                    .allow_hyphen_values(true),
            );
            if key.kind == schema::Kind::Bool {
                sub = sub.arg(
                    Arg::new(format!("no_{}", key.name))
                        .long(format!("no-{}", key.flag()))
                        .action(ArgAction::SetTrue)
                        .conflicts_with(key.name)
                        .help(format!("Same as --{} false", key.flag())),
                );
            }
        }
        cli = cli.subcommand(sub.after_help(keys_help));
    }
    let mut all_keys = String::from("Settings by command:\n");
    for cmd in Cmd::ALL {
        let names: Vec<&str> = keys_for(cmd).map(|k| k.name).collect();
        all_keys.push_str(&format!("  {:<13} {}\n", cmd.name(), names.join(", ")));
    }
    cli.after_help(all_keys)
}

fn settings(cmd: Cmd, m: &ArgMatches) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::defaults(cmd);
    if let Some(path) = m.get_one::<String>("config_file") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config file {path}: {e}")))?;
        cfg.apply_file(&text, path)?;
    }
    for key in keys_for(cmd) {
        if let Some(v) = m.get_one::<String>(key.name) {
            cfg.set(key.name, v, &format!("--{}", key.flag()))?;
        }
        if key.kind == schema::Kind::Bool && m.get_flag(&format!("no_{}", key.name)) {
            cfg.set(key.name, "false", &format!("--no-{}", key.flag()))?;
        }
    }
    Ok(cfg)
}

fn run() -> Result<(), CliError> {
    let matches = match build_cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 {
                Ok(())
            } else {
                Err(CliError::Usage(String::new()))
            };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let cmd = Cmd::parse(name).expect("registered subcommand");
    let cfg = settings(cmd, sub)?;
    let threads = cfg.usize("threads");
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Runtime(e.into()))?;
    }
    commands::run(&cfg)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            if !msg.is_empty() {
                eprintln!("error: {msg}");
                eprintln!("run `swingshot --help` for usage");
            }
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
