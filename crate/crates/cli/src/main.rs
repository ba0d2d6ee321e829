use std::process::ExitCode;

use clap::Parser;
use wgmorley_cli::{emit, parse_config, run, Args, CliError};

fn main() -> ExitCode {
    let args = Args::try_parse().unwrap_or_else(|e| e.exit());
    match parse_config(args)
        .and_then(|cfg| run(&cfg, &mut std::io::stderr()).and_then(|text| emit(&cfg, &text)))
    {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Usage(_) = e {
                eprintln!("run with --help for usage");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
