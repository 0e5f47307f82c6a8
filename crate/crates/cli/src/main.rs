fn main() {
    std::process::exit(hypocert_cli::main_with_args(std::env::args_os()));
}
