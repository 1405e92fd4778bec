fn main() {
    std::process::exit(repcomp_cli::run(std::env::args_os()));
}
