fn main() {
    std::process::exit(pdz::cli::run(std::env::args_os()));
}
