fn main() {
    std::process::exit(vortex_score::cli::dispatch(std::env::args_os()));
}
