fn main() {
    std::process::exit(krylov_core::cli::run());
}
