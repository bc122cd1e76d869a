fn main() {
    std::process::exit(lesionkit_cli::run(std::env::args_os()));
}
