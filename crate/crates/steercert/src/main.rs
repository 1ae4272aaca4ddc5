use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(steercert::cli::run(std::env::args_os()))
}
