use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use soliton_cli::{run, Cli};

fn main() -> ExitCode {
    let as_json = std::env::args().any(|a| a == "--json");
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            let verdict = if code == 0 { "pass" } else { "error" };
            if as_json {
                println!(
                    "{}",
                    serde_json::json!({ "verdict": verdict, "exit_code": code, "error": e.kind().to_string() })
                );
            } else {
                println!("verdict={verdict} exit_code={code} command=none");
            }
            return ExitCode::from(code as u8);
        }
    };
    let outcome = run(&cli);
    // a closed pipe downstream is not our failure
    let _ = writeln!(std::io::stdout(), "{}", outcome.render(cli.json));
    ExitCode::from(outcome.exit_code as u8)
}
