fn main() {
    std::process::exit(swt_sr::harness::cli::run(std::env::args_os()));
}
