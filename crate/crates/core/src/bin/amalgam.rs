use std::process::ExitCode;

fn main() -> ExitCode {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    ExitCode::from(amalgam::cli::main_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock()))
}
