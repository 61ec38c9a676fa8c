use clap::Parser;
use locsym::cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(summary) => {
            for file in &summary.files {
                println!("{}", file.display());
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            std::process::exit(err.exit_code());
        }
    }
}
