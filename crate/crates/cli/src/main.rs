use std::io::{self, Write};
use std::process::ExitCode;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = subfrac_cli::run(&argv, std::env::vars(), &mut stdout.lock(), &mut stderr.lock());
    let _ = io::stdout().flush();
    ExitCode::from(code as u8)
}
