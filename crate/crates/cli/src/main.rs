fn main() {
    std::process::exit(tumorsynth_cli::run(std::env::args_os()));
}
