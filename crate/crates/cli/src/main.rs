use clap::Parser;

fn main() {
    let cli = bsreduce::Cli::parse();
    let code = bsreduce::run(
        &cli,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    std::process::exit(code);
}
