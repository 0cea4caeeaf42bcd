fn main() {
    std::process::exit(postinfer::cli::main());
}
