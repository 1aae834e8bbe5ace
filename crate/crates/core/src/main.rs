fn main() {
    std::process::exit(conic_shock::cli::run_cli(std::env::args_os()));
}
