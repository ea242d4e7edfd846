fn main() {
    std::process::exit(wstrank::cli::main_with_args(std::env::args_os()));
}
