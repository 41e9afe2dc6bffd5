fn main() {
    std::process::exit(rankproj::cli::main());
}
