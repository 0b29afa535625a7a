fn main() {
    std::process::exit(threshold_kw::cli::main_with(std::env::args_os()));
}
