fn main() {
    std::process::exit(hot_cli::run(std::env::args_os()));
}
