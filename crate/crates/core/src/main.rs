fn main() { std::process::exit(richardson::cli::main()) }
