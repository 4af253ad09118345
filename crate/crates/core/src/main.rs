fn main() {
    std::process::exit(subseries::cli::run(std::env::args_os()));
}
