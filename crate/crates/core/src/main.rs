fn main() {
    std::process::exit(zorich::runner::run_from_args(std::env::args_os()));
}
