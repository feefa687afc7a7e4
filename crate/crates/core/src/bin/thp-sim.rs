fn main() {
    std::process::exit(robust_thp::harness::cli_main(std::env::args_os()));
}
