fn main() {
    std::process::exit(fsg::cli::main());
}
