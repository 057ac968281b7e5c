fn main() {
    std::process::exit(phasecon::cli::main_with_args(std::env::args_os()));
}
