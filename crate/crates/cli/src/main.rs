fn main() {
    std::process::exit(urt_cli::run(std::env::args_os()));
}
