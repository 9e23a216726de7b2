fn main() {
    std::process::exit(boxkb::cli::run(std::env::args_os()));
}
