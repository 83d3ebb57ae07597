fn main() {
    std::process::exit(qcycle::cli::run_from(std::env::args_os()));
}
