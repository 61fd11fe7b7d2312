//! `dwlab` command-line front end.

mod commands;
mod config;

use clap::error::ErrorKind;
use clap::{Arg, ArgAction};
use commands::COMMANDS;
use config::{parse_file, CliError, Config};
use std::collections::BTreeMap;
use std::io::Write;
use std::process::ExitCode;

fn app() -> clap::Command {
    let mut app = clap::Command::new("dwlab")
        .version(dwlab::VERSION)
        .about("Two-mode double-well condensate dynamics: orbits, Floquet analysis, NLS shadowing, normal forms")
        .subcommand_required(true);
    for c in COMMANDS {
        let mut sc = clap::Command::new(c.name)
            .about(c.about)
            .arg(Arg::new("config").long("config").value_name("FILE").help("key = value settings file"))
            .arg(Arg::new("out").long("out").short('o').value_name("FILE").help("write the artifact here instead of stdout"));
        for (k, d, h) in c.keys {
            sc = sc.arg(Arg::new(*k).long(*k).value_name("VALUE").action(ArgAction::Set).help(format!("{h} [default: {d}]")));
        }
        app = app.subcommand(sc);
    }
    app
}

fn run(args: Vec<String>) -> Result<(), CliError> {
    let m = match app().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Ok(()),
                _ => Err(CliError::Usage(String::new())),
            };
        }
    };
    let (name, sub) = m.subcommand().expect("subcommand required");
    let cmd = COMMANDS.iter().find(|c| c.name == name).expect("registered subcommand");
    let file = match sub.get_one::<String>("config") {
        Some(path) => Some(parse_file(&std::fs::read_to_string(path)?, cmd.keys)?),
        None => None,
    };
    let flags: BTreeMap<String, String> = cmd
        .keys
        .iter()
        .filter_map(|(k, _, _)| sub.get_one::<String>(k).map(|v| (k.to_string(), v.clone())))
        .collect();
    let cfg = Config::resolve(name, cmd.keys, file, flags);
    let out = (cmd.run)(&cfg)?;
    match sub.get_one::<String>("out") {
        Some(path) => std::fs::write(path, &out.text)?,
        None => std::io::stdout().write_all(out.text.as_bytes())?,
    }
    match out.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(&e, CliError::Usage(s) if s.is_empty()) {
                eprintln!("dwlab: {e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
