fn main() {
    std::process::exit(perclab::cli::dispatch(std::env::args_os()));
}
