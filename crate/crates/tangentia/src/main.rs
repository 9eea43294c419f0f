fn main() {
    std::process::exit(tangentia::cli::main_with_args(std::env::args_os()));
}
