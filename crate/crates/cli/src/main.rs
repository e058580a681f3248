fn main() {
    std::process::exit(afdm_cli::main_with(std::env::args_os()));
}
