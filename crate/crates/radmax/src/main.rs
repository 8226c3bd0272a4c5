fn main() {
    std::process::exit(radmax::cli::main());
}
