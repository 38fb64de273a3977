fn main() {
    std::process::exit(steersim::cli::run());
}
