fn main() {
    std::process::exit(optomech::cli::run(std::env::args_os()));
}
