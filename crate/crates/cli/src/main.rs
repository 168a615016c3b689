use clap::Parser;
use garrote_cli::config::{Cli, Command, RunConfig};
use garrote_cli::CliResult;

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = RunConfig::resolve(&args)?;
            if args.print_config {
                print!("{}", cfg.to_json());
                return Ok(());
            }
            garrote_cli::run(&cfg)
        }
        Command::PrintConfig(args) => {
            print!("{}", RunConfig::resolve(&args)?.to_json());
            Ok(())
        }
        Command::Plot(args) => garrote_cli::plot(&args),
        Command::Gallery(args) => garrote_cli::gallery(&args),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
