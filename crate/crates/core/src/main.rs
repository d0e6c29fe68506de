fn main() {
    std::process::exit(yb_ofr::cli::run(std::env::args_os()));
}
