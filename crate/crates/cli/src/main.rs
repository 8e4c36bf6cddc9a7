use std::process::ExitCode;

fn main() -> ExitCode {
    samgda_cli::main_entry()
}
