//! `captchapass`: password-space tables, attack simulations, CAPTCHA
//! rendering, a walkthrough of one login, and the HTTP service.

mod attack;
mod captcha;
mod demo;
mod serve;
mod space;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

pub type CmdResult = Result<(), Box<dyn std::error::Error>>;

#[derive(Debug, Parser)]
#[command(name = "captchapass", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the number of passwords for each entered length.
    Space(space::Args),
    /// Simulate a shoulder-surfing attacker over many recorded logins.
    Attack(attack::Args),
    /// Render a CAPTCHA string to a PNG file.
    Captcha(captcha::Args),
    /// Run the authentication service.
    Serve(serve::Args),
    /// Walk through one login and the basic-scheme attack.
    Demo(demo::Args),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
}

/// Prints the error and returns the usage exit status.
fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Space(a) => match a.check() {
            Ok(()) => space::run(a),
            Err(msg) => return usage_error(msg),
        },
        Command::Attack(a) => match a.check() {
            Ok(()) => attack::run(a),
            Err(msg) => return usage_error(msg),
        },
        Command::Captcha(a) => captcha::run(a),
        Command::Serve(a) => serve::run(a),
        Command::Demo(a) => demo::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
