use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use engelgap::NamedScenario;
use engelgap_cli::config::ScenarioBlock;
use engelgap_cli::error::exit;
use engelgap_cli::{
    cmd_calibrate, cmd_compare, cmd_solve, cmd_sweep_allocation, Allocation, CliError, RunConfig,
    RunOptions,
};

#[derive(Parser)]
#[command(
    name = "engelgap",
    version,
    about = "Climate damages, food prices and inequality in a heterogeneous-agent economy"
)]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip SVG output.
    #[arg(long)]
    no_plots: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one steady state.
    Solve(Common),
    /// Compare a damage scenario against a reference steady state.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Reference config; defaults to the main config without damages.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Inequality indicators over loss sizes and sectoral allocations.
    SweepAllocation {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [0.10, 0.15, 0.20, 0.25])]
        losses: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values = ["ag-only", "symmetric", "nonag-only"])]
        allocations: Vec<String>,
    },
    /// Estimate preferences from segment data and fit the income spread.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Expenditure-segment CSV.
        #[arg(long)]
        data: PathBuf,
        /// Only run the food-share regression.
        #[arg(long)]
        skip_spread: bool,
    },
    /// Print the default config.
    DefaultConfig,
}

fn load(common: &Common) -> Result<(RunConfig, RunOptions), CliError> {
    let cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mut opts = RunOptions::from_config(&cfg);
    if let Some(out) = &common.out {
        opts.out_dir = out.clone();
    }
    opts.plots &= !common.no_plots;
    Ok((cfg, opts))
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let workers = cli.workers;
    match cli.command {
        Command::Solve(common) => {
            let (cfg, mut opts) = load(&common)?;
            opts.workers = workers;
            let res = cmd_solve(&cfg, &opts)?;
            print_files(&res.files);
            let d = &res.steady_state.diagnostics;
            println!(
                "r = {:.8}, K = {:.6}, clearing residual {:.2e}, Euler residual {:.2e}",
                res.steady_state.net_rate(),
                res.steady_state.aggregates.capital,
                d.clearing_residual,
                d.euler_max
            );
            if !res.failures.is_empty() {
                return Err(CliError::Invariant(res.failures));
            }
        }
        Command::Compare { common, reference } => {
            let (cfg, mut opts) = load(&common)?;
            opts.workers = workers;
            let reference = match reference {
                Some(p) => RunConfig::load(&p)?,
                None => cfg.with_scenario(ScenarioBlock::named(NamedScenario::NoDamage)),
            };
            let res = cmd_compare(&reference, &cfg, &opts)?;
            print_files(&res.files);
            let r = &res.report;
            println!(
                "dY_f {:+.2}%, dY_c {:+.2}%, dK {:+.2}%, d80-20 {:+.4}, d gini {:+.4}",
                100.0 * r.pct_y_f,
                100.0 * r.pct_y_c,
                100.0 * r.pct_k,
                r.d_expenditure_8020,
                r.d_wealth_gini
            );
        }
        Command::SweepAllocation {
            common,
            losses,
            allocations,
        } => {
            let (cfg, mut opts) = load(&common)?;
            opts.workers = workers;
            let allocs = allocations
                .iter()
                .map(|a| {
                    Allocation::parse(a)
                        .ok_or_else(|| CliError::Usage(format!("unknown allocation `{a}`")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let res = cmd_sweep_allocation(&cfg, &losses, &allocs, &opts)?;
            print_files(&res.files);
            let failed = res.cells.iter().filter(|c| c.result.is_err()).count();
            if failed > 0 {
                eprintln!(
                    "{failed} of {} sweep cells failed; see sweep.csv",
                    res.cells.len()
                );
            }
        }
        Command::Calibrate {
            common,
            data,
            skip_spread,
        } => {
            let (cfg, mut opts) = load(&common)?;
            opts.workers = workers;
            let res = cmd_calibrate(&data, &cfg, &opts, !skip_spread)?;
            print_files(&res.files);
            println!(
                "phi = {:.6}, f_bar = {:.6}",
                res.estimate.phi, res.estimate.f_bar
            );
            match res.spread {
                Some(Ok(cal)) => println!(
                    "sigma = {:.6}, achieved 80-20 = {:.4}",
                    cal.sigma, cal.achieved
                ),
                Some(Err(e)) => return Err(e.into()),
                None => {}
            }
        }
        Command::DefaultConfig => print!("{}", RunConfig::default().to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
