use std::process::ExitCode;

use npmc_cli::{run, ConfigError, ExperimentConfig, RunError, EXIT_CONFIG};

fn main() -> ExitCode {
    let cfg = match ExperimentConfig::parse_with_file(std::env::args_os()) {
        Ok(cfg) => cfg,
        Err(ConfigError::Cli(e)) => e.exit(),
        Err(e) => {
            eprintln!("npmc: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(&cfg) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("npmc: {e}");
            ExitCode::from(RunError::exit_code(&e))
        }
    }
}
