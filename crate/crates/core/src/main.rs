fn main() {
    std::process::exit(tarsim::cli::run(std::env::args_os()));
}
