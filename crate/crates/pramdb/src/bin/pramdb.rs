fn main() {
    std::process::exit(pramdb::cli::run(std::env::args_os()));
}
