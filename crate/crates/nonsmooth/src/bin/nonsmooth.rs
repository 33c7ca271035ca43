fn main() {
    let code = nonsmooth::cli::execute(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
