use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(isodistill::run(std::env::args_os()))
}
