fn main() {
    std::process::exit(segrefine::cli::run(std::env::args_os()));
}
