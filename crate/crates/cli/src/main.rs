fn main() {
    std::process::exit(btrengine_cli::run(std::env::args_os()));
}
