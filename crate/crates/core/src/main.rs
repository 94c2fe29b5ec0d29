fn main() {
    std::process::exit(forestflow::cli::run(std::env::args_os()));
}
