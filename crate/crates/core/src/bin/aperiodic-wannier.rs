fn main() {
    std::process::exit(aperiodic_wannier::cli::run(std::env::args_os()));
}
