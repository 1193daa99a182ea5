fn main() {
    std::process::exit(killing_core::cli::main_with_args(std::env::args_os()));
}
