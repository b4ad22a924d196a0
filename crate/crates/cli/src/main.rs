fn main() {
    std::process::exit(epsb_cli::main_with(std::env::args_os()));
}
