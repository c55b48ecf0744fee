fn main() {
    std::process::exit(rankcert::cli::run_cli(std::env::args()));
}
