fn main() {
    std::process::exit(schrodinger_lab::cli::main_with(std::env::args_os()));
}
