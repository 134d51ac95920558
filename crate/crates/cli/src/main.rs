fn main() {
    let cli = match hmmerg_cli::parse_args(std::env::args_os()) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    std::process::exit(hmmerg_cli::run(&cli));
}
