fn main() {
    std::process::exit(mvbd::cli::main());
}
