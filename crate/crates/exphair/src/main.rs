fn main() {
    std::process::exit(exphair::cli::run(std::env::args_os()));
}
