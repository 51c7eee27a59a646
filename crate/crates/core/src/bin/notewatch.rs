fn main() {
    std::process::exit(notewatch::cli::main_with_args(std::env::args().collect()));
}
