fn main() {
    std::process::exit(markov_dilation::cli::run(std::env::args_os()));
}
