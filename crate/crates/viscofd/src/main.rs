fn main() {
    std::process::exit(viscofd::cli::run());
}
