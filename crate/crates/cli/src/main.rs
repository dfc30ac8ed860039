fn main() {
    std::process::exit(geo2vec_cli::main_with(std::env::args_os()));
}
