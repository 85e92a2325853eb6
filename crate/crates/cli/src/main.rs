fn main() {
    std::process::exit(xtalk_cli::main_with_args(std::env::args_os()));
}
