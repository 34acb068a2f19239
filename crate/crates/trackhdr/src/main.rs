fn main() {
    std::process::exit(trackhdr::cli::run());
}
