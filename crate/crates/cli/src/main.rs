fn main() {
    std::process::exit(finder_cli::main_with(std::env::args_os()));
}
