fn main() {
    std::process::exit(wzt::cli::run(std::env::args_os()));
}
