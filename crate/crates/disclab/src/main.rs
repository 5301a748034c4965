use disclab::cli;

fn main() {
    if let Err(e) = cli::init_threads() {
        eprintln!("error: {e}");
        std::process::exit(cli::EXIT_CONFIG);
    }
    std::process::exit(cli::run(std::env::args_os()));
}
