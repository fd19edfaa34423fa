use std::io::Write;

fn main() {
    let inv = intraday_cli::parse_and_run(std::env::args_os());
    print!("{}", inv.stdout);
    eprint!("{}", inv.stderr);
    let _ = std::io::stdout().flush();
    std::process::exit(inv.exit.code().into());
}
