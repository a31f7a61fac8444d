fn main() {
    std::process::exit(dopf_cli::run(std::env::args_os()));
}
