fn main() {
    std::process::exit(attgan3d::cli::dispatch(std::env::args_os()));
}
