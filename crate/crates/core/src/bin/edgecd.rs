fn main() {
    std::process::exit(edgecd::cli::main_with_args(std::env::args_os()));
}
