fn main() {
    std::process::exit(stationary_excursions::cli::run(std::env::args_os()));
}
