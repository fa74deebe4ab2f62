fn main() {
    std::process::exit(granflow::cli::run(std::env::args_os()));
}
