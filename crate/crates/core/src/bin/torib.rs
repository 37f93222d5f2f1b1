fn main() {
    std::process::exit(torib::cli::main_with_args(std::env::args_os()));
}
