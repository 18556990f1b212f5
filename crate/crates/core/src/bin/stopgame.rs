fn main() {
    std::process::exit(stopgame::cli::main_with_args(std::env::args_os()));
}
