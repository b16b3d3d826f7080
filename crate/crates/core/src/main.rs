fn main() {
    std::process::exit(specball::cli::run(std::env::args_os()));
}
