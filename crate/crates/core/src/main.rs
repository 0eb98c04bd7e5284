use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use envelope_ml::cli::{execute, Cli, Outcome, EXIT_USAGE};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE as u8),
            };
        }
    };
    match execute(&cli.command) {
        Ok(Outcome::Summary(s)) => {
            println!(
                "{} rows ({} train / {} test); PCA-selected test accuracy {:.3}, EFS-selected {:.3}; outputs in {}",
                s.counts.dataset.total,
                s.counts.train.total,
                s.counts.test.total,
                s.pca_selected.test_accuracy,
                s.efs_selected.test_accuracy,
                s.config.out_dir.display()
            );
            ExitCode::SUCCESS
        }
        Ok(Outcome::Message(m)) => {
            println!("{m}");
            ExitCode::SUCCESS
        }
        Ok(Outcome::Silent) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
