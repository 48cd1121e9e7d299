use std::process::ExitCode;

use clap::Parser;
use rfmnet::cli::Cli;
use rfmnet::{run, CliError, SCHEMA_VERSION};

fn report_error(e: &CliError) {
    let doc = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "error": { "kind": e.kind_name(), "message": e.to_string() },
    });
    eprintln!("{doc}");
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RFMNET_LOG", "info")).init();
    let cli = Cli::parse();
    match cli.into_config().and_then(|c| run(&c)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(&e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
