fn main() {
    std::process::exit(tempord::cli::main_with_args(std::env::args_os()));
}
