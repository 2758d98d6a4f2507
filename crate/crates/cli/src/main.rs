use std::process::ExitCode;

use clap::Parser;

use mwc_cli::args::Cli;

fn main() -> ExitCode {
    // Usage errors exit 1; 2 is reserved for disagreeing predictions.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = cli.run();
    match &result {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if !outcome.agreement {
                eprintln!("mwc: predictions disagree");
            }
        }
        Err(e) => eprintln!("mwc: {e}"),
    }
    ExitCode::from(mwc_cli::exit_code(&result))
}
