use std::process::ExitCode;

use oaspmdp::cli::{self, CliError};

fn main() -> ExitCode {
    let config = match cli::parse_args(std::env::args_os(), std::env::var(cli::OUT_ENV).ok()) {
        Ok(c) => c,
        Err(CliError::Info(text)) => {
            print!("{text}");
            return ExitCode::SUCCESS;
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {}", msg.trim_end());
            return ExitCode::from(1);
        }
    };
    match cli::run(&config) {
        Ok(summary) => {
            println!(
                "scenario {} ({} trials x {} episodes) -> {}",
                config.spec.kind.name(),
                config.spec.trials,
                config.spec.episodes,
                config.scenario_dir().display()
            );
            for s in summary {
                println!(
                    "{:<8} final-100 mean steps {:>8.2}  mean return {:>8.2}",
                    s.agent.name(),
                    s.mean_steps,
                    s.mean_return
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
