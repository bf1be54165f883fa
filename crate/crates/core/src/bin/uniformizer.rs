fn main() {
    std::process::exit(uniformizer::cli::main_with_args(std::env::args()));
}
