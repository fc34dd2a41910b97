fn main() {
    std::process::exit(vanet_adapt::cli::run(std::env::args_os()));
}
