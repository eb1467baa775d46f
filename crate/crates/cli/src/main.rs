fn main() {
    std::process::exit(finicode_cli::run(std::env::args_os()));
}
