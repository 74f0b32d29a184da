fn main() {
    std::process::exit(foley_core::cli::run(std::env::args_os()));
}
