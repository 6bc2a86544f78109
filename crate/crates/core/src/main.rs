fn main() {
    std::process::exit(snmtf::harness::run_cli(std::env::args_os()));
}
