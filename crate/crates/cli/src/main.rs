fn main() {
    std::process::exit(deffusion_cli::run(std::env::args_os()));
}
