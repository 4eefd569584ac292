fn main() {
    std::process::exit(gdgesn::cli::run());
}
