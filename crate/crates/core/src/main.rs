fn main() {
    std::process::exit(chsh_forge::cli::run(std::env::args_os()));
}
