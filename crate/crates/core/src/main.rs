fn main() {
    std::process::exit(sobolev_nets::cli::run(std::env::args_os()));
}
