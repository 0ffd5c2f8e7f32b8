use clap::Parser;

fn main() {
    let cli = heunx::Cli::parse();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = heunx::run(&cli, &mut stdout.lock(), &mut stderr.lock());
    std::process::exit(code);
}
