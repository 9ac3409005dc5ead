fn main() {
    std::process::exit(volembed::cli::run(std::env::args_os()));
}
