use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wpcn::{Command, Flags, Format, GridSize, RunManifest};

/// Experiments on the max-min throughput of a wireless-powered network with limited feedback.
#[derive(Debug, Parser)]
#[command(name = "wpcn", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON configuration; the reference network is used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Monte-Carlo realizations per operating point.
    #[arg(long, global = true, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Simulated and analytic rates at fixed operating points.
    Forward {
        /// JSON list of {alpha, beta, xi}; five reference points by default.
        #[arg(long)]
        scenarios: Option<PathBuf>,
    },
    /// Max-min optimum, optionally checked against a grid search.
    Optimize {
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        asymptotic_init: bool,
        #[arg(long)]
        grid: Option<GridSize>,
    },
    /// Optimum for each antenna count.
    SweepM {
        #[arg(long, value_delimiter = ',')]
        m_list: Option<Vec<usize>>,
        #[arg(long)]
        asymptotic_init: bool,
    },
    /// Per-device rate over the (alpha, beta) grid.
    Surface {
        #[arg(long)]
        grid: Option<GridSize>,
        /// 1-based devices to report.
        #[arg(long, value_delimiter = ',')]
        devices: Option<Vec<usize>>,
    },
    /// Large-array limits for each antenna count.
    Asymptotics {
        #[arg(long, value_delimiter = ',')]
        m_list: Option<Vec<usize>>,
    },
    /// Exhaustive grid optimum.
    Oracle {
        #[arg(long)]
        grid: Option<GridSize>,
    },
}

fn manifest(cli: Cli) -> RunManifest {
    let mut flags = Flags::default();
    let command = match cli.command {
        Sub::Forward { scenarios } => {
            flags.scenarios = scenarios;
            Command::Forward
        }
        Sub::Optimize {
            oracle,
            asymptotic_init,
            grid,
        } => {
            flags.oracle = oracle;
            flags.asymptotic_init = asymptotic_init;
            flags.grid = grid;
            Command::Optimize
        }
        Sub::SweepM { m_list, asymptotic_init } => {
            flags.m_list = m_list;
            flags.asymptotic_init = asymptotic_init;
            Command::SweepM
        }
        Sub::Surface { grid, devices } => {
            flags.grid = grid;
            flags.devices = devices;
            Command::Surface
        }
        Sub::Asymptotics { m_list } => {
            flags.m_list = m_list;
            Command::Asymptotics
        }
        Sub::Oracle { grid } => {
            flags.grid = grid;
            Command::Oracle
        }
    };
    RunManifest {
        command,
        config_path: cli.common.config,
        seed: cli.common.seed,
        trials: cli.common.trials as usize,
        output_path: cli.common.out,
        format: match cli.common.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        },
        flags,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match wpcn::execute(&manifest(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wpcn: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
