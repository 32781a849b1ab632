use clap::Parser;

use tripoint::driver;

fn main() {
    let cli = driver::cli::Cli::parse();
    match driver::cli::run(cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}
