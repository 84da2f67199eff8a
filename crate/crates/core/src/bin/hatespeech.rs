fn main() {
    std::process::exit(hatespeech::cli::run(std::env::args_os()));
}
