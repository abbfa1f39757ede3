fn main() {
    std::process::exit(sidedress::interface::cli::run(std::env::args_os()));
}
