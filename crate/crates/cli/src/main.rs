use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use oneshot_cli::{run, CliError, Invocation};

fn fail(e: &CliError) -> ExitCode {
    let report = serde_json::to_string(&e.report()).unwrap_or_else(|_| e.to_string());
    eprintln!("{report}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let inv = match Invocation::try_parse() {
        Ok(inv) => inv,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::validation(e.render().to_string().trim_end())),
    };
    match run(&inv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
