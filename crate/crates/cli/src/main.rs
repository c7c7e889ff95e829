use std::process::ExitCode;

fn main() -> ExitCode {
    dsi_hurst_cli::run_pipeline(std::env::args_os())
}
