use std::process::ExitCode;

fn main() -> ExitCode {
    match pharmwatch_cli::run(std::env::args_os()) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
