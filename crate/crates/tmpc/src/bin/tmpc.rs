fn main() {
    std::process::exit(tmpc::cli::main_with_args(std::env::args_os()));
}
