fn main() {
    std::process::exit(logbesov::cli::main_with_args(std::env::args_os()));
}
