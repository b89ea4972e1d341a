fn main() {
    std::process::exit(cpscreen::cli::run(std::env::args_os()));
}
