fn main() {
    std::process::exit(poisratio::cli::run(std::env::args_os()));
}
