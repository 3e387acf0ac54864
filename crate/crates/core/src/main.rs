fn main() {
    std::process::exit(dcpair::cli::main_with_args(std::env::args_os()));
}
