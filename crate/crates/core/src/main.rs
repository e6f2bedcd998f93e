fn main() {
    std::process::exit(tieflex::cli::run(std::env::args_os()));
}
