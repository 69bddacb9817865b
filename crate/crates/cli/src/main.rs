fn main() {
    std::process::exit(sparsefo_cli::run_cli(std::env::args_os()));
}
