fn main() {
    std::process::exit(csbm::cli::main_exit_code());
}
