fn main() {
    std::process::exit(decohere::harness::cli::cli(std::env::args_os()));
}
