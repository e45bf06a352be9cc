fn main() { std::process::exit(emrestore::cli::run(std::env::args_os())); }
