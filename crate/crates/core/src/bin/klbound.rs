fn main() {
    std::process::exit(klbound::cli::main_with_args(std::env::args_os()));
}
