fn main() {
    std::process::exit(gdae::harness::cli::main_with_args(std::env::args_os()));
}
