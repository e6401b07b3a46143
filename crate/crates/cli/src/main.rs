fn main() {
    std::process::exit(blindsnr_cli::main_with_args(std::env::args_os()));
}
