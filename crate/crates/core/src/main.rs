fn main() {
    std::process::exit(fastrates::cli::run(std::env::args_os()));
}
