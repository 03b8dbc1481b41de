fn main() {
    std::process::exit(opineq::cli::main());
}
