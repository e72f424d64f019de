use clap::Parser;

use cascade::cli;

fn main() {
    let args = cli::Cli::parse();
    if let Err(err) = cli::run(args) {
        let code = cli::exit_code(&err);
        eprintln!(
            "{}",
            serde_json::json!({ "error": err.to_string(), "code": code })
        );
        std::process::exit(code);
    }
}
