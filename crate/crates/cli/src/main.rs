fn main() {
    std::process::exit(qhmm_cli::run(std::env::args_os()));
}
