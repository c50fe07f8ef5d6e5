fn main() {
    std::process::exit(ncrat::cli::run());
}
