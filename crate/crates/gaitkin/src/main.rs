fn main() {
    std::process::exit(gaitkin::cli::main_with_args(std::env::args_os().collect()));
}
