use std::process::ExitCode;

use clap::Parser;

use crimefair_cli::app::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            if let Some(out) = f.output {
                print!("{out}");
            }
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
