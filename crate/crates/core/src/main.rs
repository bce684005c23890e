use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let code = feather::cli::run(&args, &mut io::stdout().lock(), &mut io::stderr().lock()).unwrap_or_else(|e| {
        eprintln!("{e}");
        feather::cli::EXIT_USAGE
    });
    ExitCode::from(code as u8)
}
