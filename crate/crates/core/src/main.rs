fn main() {
    std::process::exit(parcel_ca::cli::run_command(std::env::args_os()));
}
