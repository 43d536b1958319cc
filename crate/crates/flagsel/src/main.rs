fn main() {
    // unlocked handles: campaign workers report progress on stderr
    let code = flagsel::cli::run(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
