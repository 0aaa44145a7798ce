use std::process::ExitCode;

fn main() -> ExitCode {
    senstype::cli::main()
}
