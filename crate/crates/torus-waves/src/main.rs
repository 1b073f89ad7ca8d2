use clap::Parser;
use torus_waves::cli::{self, Cli};

fn main() {
    let cli = Cli::parse(); // usage errors exit 2 here
    match cli::run(cli) {
        Ok(()) => {}
        Err(e) => {
            let payload = serde_json::json!({
                "error": { "kind": e.kind, "message": e.message }
            });
            eprintln!("{payload}");
            std::process::exit(1);
        }
    }
}
