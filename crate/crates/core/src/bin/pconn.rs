fn main() {
    std::process::exit(pconn::cli::run(std::env::args_os()));
}
