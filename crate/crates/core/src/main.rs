fn main() {
    std::process::exit(jn_lab::cli::dispatch(std::env::args_os()));
}
