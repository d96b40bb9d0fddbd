use std::process::ExitCode;

fn main() -> ExitCode {
    match trendperm::cli::run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
