fn main() {
    std::process::exit(refdoc_cli::run(std::env::args_os()));
}
