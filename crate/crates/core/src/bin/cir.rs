fn main() {
    std::process::exit(cir_drift::cli::run(std::env::args_os()));
}
