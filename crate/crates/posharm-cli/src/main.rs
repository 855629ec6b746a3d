use clap::Parser;
use posharm_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(path) => println!("{}", path.display()),
        Err(e) => {
            eprintln!("posharm: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
