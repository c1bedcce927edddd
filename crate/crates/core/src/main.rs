fn main() {
    std::process::exit(ucboost::cli::run(std::env::args_os()));
}
