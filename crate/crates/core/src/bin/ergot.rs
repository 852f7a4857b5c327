fn main() {
    std::process::exit(ergot::cli::run(std::env::args_os()));
}
