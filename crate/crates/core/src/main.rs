fn main() {
    std::process::exit(eventrd::harness::cli_main(std::env::args_os()));
}
