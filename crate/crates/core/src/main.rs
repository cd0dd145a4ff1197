fn main() {
    std::process::exit(hwnas_core::cli::run());
}
