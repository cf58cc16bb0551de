fn main() {
    std::process::exit(modchar_lab::run(std::env::args_os()));
}
