mod args;
mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let cfg = cli.config.as_deref();
    let section = cli.command.name();
    let run = match cli.command {
        Command::Tvmg(a) => commands::tvmg(config::merge(&a, cfg, section)?),
        Command::StaticOls(a) => commands::static_ols(config::merge(&a, cfg, section)?),
        Command::CvBandwidth(a) => commands::cv_bandwidth(config::merge(&a, cfg, section)?),
        Command::Lofo(a) => commands::lofo_cmd(config::merge(&a, cfg, section)?),
        Command::ShiftTest(a) => commands::shift(config::merge(&a, cfg, section)?),
        Command::AggregateTv(a) => commands::aggregate_tv(config::merge(&a, cfg, section)?),
        Command::Pca(a) => commands::pca(config::merge(&a, cfg, section)?),
        Command::Transform(a) => commands::transform(config::merge(&a, cfg, section)?),
        Command::Simulate(a) => commands::simulate(config::merge(&a, cfg, section)?),
    }?;
    for path in run.outputs.write(&run.out_dir, &run.meta)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tvmg {name}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
