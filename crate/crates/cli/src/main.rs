fn main() {
    let out = l1cert_cli::run(std::env::args_os());
    print!("{}", out.stdout);
    std::process::exit(out.exit_code);
}
