use std::process::ExitCode;

use clap::Parser;

use multibaker_cli::{run_cli, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_cli(cli) {
        Ok(files) => {
            for f in &files {
                println!("wrote {}", f.name);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("multibaker: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
