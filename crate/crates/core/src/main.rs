fn main() {
    std::process::exit(haltlab::cli::main_with_args(std::env::args_os()));
}
