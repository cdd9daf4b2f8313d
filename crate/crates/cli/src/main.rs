fn main() {
    std::process::exit(nholo_cli::run(std::env::args_os()));
}
