fn main() {
    std::process::exit(tmodes::cli::run(std::env::args_os()));
}
