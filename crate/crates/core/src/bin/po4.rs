use std::io;

fn main() {
    // stderr stays unlocked: log records from worker threads share it
    let code = po4::cli::run(std::env::args_os(), &mut io::stdout().lock(), &mut io::stderr());
    std::process::exit(code);
}
