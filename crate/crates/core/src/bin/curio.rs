fn main() {
    std::process::exit(curio::harness::cli::run_subcommand(std::env::args_os()));
}
