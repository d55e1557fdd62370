fn main() {
    std::process::exit(regulus_cli::run(std::env::args_os()));
}
