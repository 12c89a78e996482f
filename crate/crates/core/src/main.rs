fn main() {
    std::process::exit(crisim::cli::run(std::env::args_os()));
}
