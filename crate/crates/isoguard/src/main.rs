fn main() {
    std::process::exit(isoguard::cli::run(std::env::args_os()));
}
