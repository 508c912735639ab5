fn main() {
    std::process::exit(guidetrack::cli::run(std::env::args_os()));
}
