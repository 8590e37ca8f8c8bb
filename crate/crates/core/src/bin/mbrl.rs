fn main() {
    std::process::exit(mbrl_game::cli::main_with_args(std::env::args_os()));
}
