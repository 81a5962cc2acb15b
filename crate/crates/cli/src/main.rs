use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = evib_cli::args::Cli::parse();
    if let Err(e) = evib_cli::run(&cli) {
        eprintln!("evib: {e}");
        std::process::exit(e.exit_code());
    }
}
