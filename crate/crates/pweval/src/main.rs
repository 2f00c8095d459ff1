fn main() {
    std::process::exit(pweval::cli::run(std::env::args()));
}
