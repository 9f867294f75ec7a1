fn main() {
    std::process::exit(ubp_cli::run(std::env::args().collect()));
}
