fn main() {
    std::process::exit(addrlink_cli::run(std::env::args_os()));
}
