use std::io;
use std::panic;
use std::process::ExitCode;

use cmtag::cli::{run, EXIT_INTERNAL};

fn main() -> ExitCode {
    let verbose = std::env::args().any(|a| a == "-v" || a == "--verbose");
    env_logger::Builder::new()
        .filter_level(if verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .format_timestamp(None)
        .init();
    let result =
        panic::catch_unwind(|| run(std::env::args_os(), &mut io::stdout(), &mut io::stderr()));
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(_) => {
            eprintln!("internal error; this is a bug");
            ExitCode::from(EXIT_INTERNAL as u8)
        }
    }
}
