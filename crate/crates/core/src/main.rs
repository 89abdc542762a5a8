fn main() {
    std::process::exit(ordiso::cli::main());
}
