use std::process::ExitCode;

fn main() -> ExitCode {
    mprism::cli::main()
}
