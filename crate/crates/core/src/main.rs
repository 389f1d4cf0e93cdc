fn main() {
    std::process::exit(hopbound::cli::run(std::env::args_os()));
}
