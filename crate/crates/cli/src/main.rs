fn main() {
    std::process::exit(pulsegraph_cli::run(std::env::args_os()));
}
