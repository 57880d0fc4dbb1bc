fn main() {
    std::process::exit(riemflow_cli::main_with(std::env::args_os()));
}
