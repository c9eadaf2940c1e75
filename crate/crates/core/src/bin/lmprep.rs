fn main() {
    std::process::exit(lmprep::cli::main_with(std::env::args_os()));
}
