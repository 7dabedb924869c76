fn main() {
    std::process::exit(arqkey_cli::run(std::env::args_os()));
}
