fn main() {
    std::process::exit(chemowave::cli::main_with_args(std::env::args_os()));
}
