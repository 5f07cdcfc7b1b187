fn main() {
    std::process::exit(nefcone::cli::main_with(std::env::args_os()));
}
