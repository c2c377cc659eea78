use std::process::ExitCode;

use clap::Parser;
use dgla_lab::commands::{run_cli, Cli};

fn main() -> ExitCode {
    let start = std::time::Instant::now();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version with its own success exit
            if e.use_stderr() {
                eprintln!("{}", e);
                return ExitCode::from(2);
            }
            print!("{}", e);
            return ExitCode::SUCCESS;
        }
    };
    if let Ok(threads) = std::env::var("DGLA_LAB_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let machine = cli.format == "machine";
    match run_cli(cli) {
        Ok((report, code)) => {
            if machine {
                print!("{}", report.to_machine());
            } else {
                print!("{}", report.to_text(Some(start.elapsed())));
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(2)
        }
    }
}
