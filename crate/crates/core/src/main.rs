fn main() {
    std::process::exit(causality_kit::cli::run());
}
