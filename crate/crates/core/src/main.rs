fn main() {
    std::process::exit(polarflip::cli::dispatch(std::env::args_os()));
}
