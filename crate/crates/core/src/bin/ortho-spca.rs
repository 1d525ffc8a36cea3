fn main() {
    std::process::exit(ortho_spca::cli::main_with_args(std::env::args_os()));
}
