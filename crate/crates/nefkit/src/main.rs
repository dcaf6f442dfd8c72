use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(nefkit::run(std::env::args_os()))
}
