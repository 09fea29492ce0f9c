use clap::Parser;

use sonc_cli::{render, render_json, run, Cli};

fn main() {
    let cli = Cli::parse();
    let result = run(&cli);
    if cli.json {
        println!("{}", render_json(&result));
    }
    let code = match result {
        Ok((report, code)) => {
            if !cli.json {
                println!("{}", render(&report));
            }
            code
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    };
    std::process::exit(code);
}
