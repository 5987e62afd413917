fn main() {
    std::process::exit(autores_cli::run(std::env::args_os()));
}
