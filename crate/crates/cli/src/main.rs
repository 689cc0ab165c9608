use std::process::ExitCode;

use walkcent_cli::{run_command, CliError};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run_command(std::env::args()) {
        Ok(report) => {
            if report.out.is_none() {
                println!("{}", report.to_json());
            }
            ExitCode::SUCCESS
        }
        Err(CliError::Arguments(e)) => {
            let code = if e.use_stderr() { walkcent_cli::EXIT_USAGE } else { 0 };
            let _ = e.print();
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
