fn main() {
    std::process::exit(uma::cli::main_with_args(std::env::args_os()));
}
