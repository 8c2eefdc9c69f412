fn main() {
    std::process::exit(rsbc::cli::run(std::env::args_os()));
}
