//! The `evib` command-line tool: dataset simulation, extraction,
//! identification, regression, compensation and reporting.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod plotdata;

use args::{Cli, Command};
use error::{CliError, CliResult};

pub fn run(cli: &Cli) -> CliResult<()> {
    let work = || match &cli.command {
        Command::Simulate(a) => commands::simulate::run(a),
        Command::Extract(a) => commands::extract(a),
        Command::Identify(a) => commands::identify(a),
        Command::Regress(a) => commands::regress_cmd(a),
        Command::Correlate(a) => commands::correlate_cmd(a),
        Command::Compensate(a) => commands::compensate(a),
        Command::VerifyRender(a) => commands::verify_render_cmd(a),
        Command::Pipeline(a) => commands::pipeline::run(a),
        Command::Report(a) => commands::report::run(a),
    };
    match cli.jobs {
        None => work(),
        Some(0) => Err(CliError::usage("--jobs must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::usage(format!("cannot start {n} worker threads: {e}")))?
            .install(work),
    }
}
