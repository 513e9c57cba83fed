fn main() {
    std::process::exit(rabi_balance::cli::run(std::env::args_os()));
}
