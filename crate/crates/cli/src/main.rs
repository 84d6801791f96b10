fn main() {
    std::process::exit(nvq_cli::run(std::env::args_os()) as i32);
}
