fn main() {
    std::process::exit(afmm::cli::run_cli());
}
