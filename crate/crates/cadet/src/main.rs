fn main() {
    std::process::exit(cadet::cli::main());
}
