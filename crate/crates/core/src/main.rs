fn main() {
    std::process::exit(rigidity_core::cli::run(std::env::args_os()));
}
