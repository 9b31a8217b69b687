fn main() {
    std::process::exit(crossprop::cli::main());
}
