fn main() {
    let code = match qent::parse_args(std::env::args_os()) {
        Ok(config) => qent::run(&config),
        Err(qent::CliError::Args(e)) => {
            let _ = e.print();
            e.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
