use std::io::Write;

fn main() {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if let Err(e) = irisct::cli::run(std::env::args_os(), &mut out) {
        let _ = out.flush();
        eprintln!("error: {e}");
        std::process::exit(irisct::cli::exit_code(&e));
    }
}
