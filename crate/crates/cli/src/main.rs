use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use feegame::acceptance::{run_acceptance, AcceptanceOptions};
use feegame::experiment::{ExperimentConfig, Runner, TableReport, CATALOG, FIGURE_IDS};
use feegame::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_ACCEPTANCE: u8 = 4;

/// Equilibrium dynamic fees for competing AMMs: solve, simulate, tabulate.
#[derive(Debug, Parser)]
#[command(name = "feegame", version)]
struct Cli {
    /// Root directory for outputs; each experiment writes to a subdirectory.
    #[arg(long, global = true, env = "FEEGAME_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,

    /// Override the number of simulated paths.
    #[arg(long)]
    paths: Option<usize>,

    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Override the time step of solver and simulator.
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the equilibrium and write fee surfaces.
    Solve(RunArgs),
    /// Simulate every configured policy and write aggregate statistics.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Also write per-trade logs.
        #[arg(long)]
        trades: bool,
    },
    /// Simulate and write the revenue table.
    Table(RunArgs),
    /// Write the CSVs behind catalog figures (`--paths` sets the scan size).
    FigureData {
        #[command(flatten)]
        run: RunArgs,
        /// Figure ids; defaults to the config's list, or every id.
        #[arg(long = "id")]
        ids: Vec<String>,
    },
    /// Run the acceptance suite and print a pass/fail table.
    Verify {
        /// Paths for the table runs.
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        /// Paths of the desk-scale check (a prefix of the table run).
        #[arg(long, default_value_t = 10_000)]
        desk_paths: usize,
        /// Paths per point of the activity scan.
        #[arg(long, default_value_t = 10_000)]
        scan_paths: usize,
    },
    /// List catalogued tables and figures.
    List,
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(n) = args.paths {
        cfg.n_paths = n;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(dt) = args.dt {
        cfg.dt = dt;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn runner(cfg: ExperimentConfig, cli: &Cli) -> Result<Runner, Error> {
    Ok(Runner::new(cfg, &cli.out_dir)?.with_threads(cli.threads))
}

fn print_table(report: &TableReport, path: &Path) {
    println!(
        "{:<10} {:<9} {:>10} {:>9} {:>9} {:>10}",
        "player", "type", "fees", "sell", "buy", "vol"
    );
    for (label, kind, s) in report.rows() {
        println!(
            "{:<10} {:<9} {:>10.4} {:>9.3} {:>9.3} {:>10.2}",
            label,
            kind.label(),
            s.fees.mean,
            s.sell.mean,
            s.buy.mean,
            s.volume.mean
        );
    }
    println!("wrote {}", path.display());
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    if let Some(n) = cli.threads {
        // ignore a second initialisation; the first one wins
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Solve(args) => {
            let r = runner(load(args)?, cli)?;
            let (_, files) = r.solve_and_write()?;
            println!("wrote {} files under {}", files.len(), r.dir().display());
        }
        Command::Simulate { run, trades } => {
            let r = runner(load(run)?, cli)?.with_trade_logs(*trades);
            let runs = r.simulate()?;
            for run in &runs {
                let t = &run.batch.total;
                println!(
                    "{:<9} fees {:.4} ± {:.4}  vol {:.2}",
                    run.kind.label(),
                    t.fees.mean,
                    t.fees.stderr,
                    t.volume.mean
                );
            }
            println!("wrote {}", r.dir().join("simulate.csv").display());
        }
        Command::Table(args) => {
            let r = runner(load(args)?, cli)?;
            let report = r.table()?;
            print_table(&report, &r.dir().join("table.csv"));
        }
        Command::FigureData { run, ids } => {
            let mut cfg = load(run)?;
            if let Some(n) = run.paths {
                cfg.scan.n_paths = n;
            }
            let ids: Vec<String> = if !ids.is_empty() {
                ids.clone()
            } else if !cfg.figures.is_empty() {
                cfg.figures.clone()
            } else {
                FIGURE_IDS.iter().map(|s| s.to_string()).collect()
            };
            let r = runner(cfg, cli)?;
            for id in &ids {
                for path in r.figure(id)? {
                    println!("wrote {}", path.display());
                }
            }
        }
        Command::Verify {
            paths,
            desk_paths,
            scan_paths,
        } => {
            let mut opts = AcceptanceOptions::new(&cli.out_dir.join("acceptance"));
            opts.threads = cli.threads;
            opts.table_paths = *paths;
            opts.desk_paths = *desk_paths;
            opts.scan_paths = *scan_paths;
            let results = run_acceptance(&opts, &mut |c| {
                println!(
                    "{}  {}  ({})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            });
            let failed = results.iter().filter(|c| !c.passed).count();
            println!("{} passed, {failed} failed", results.len() - failed);
            if failed > 0 {
                return Ok(ExitCode::from(EXIT_ACCEPTANCE));
            }
        }
        Command::List => {
            for e in CATALOG {
                println!("{:<20} {:<7} {:<26} {}", e.id, e.kind, e.config, e.description);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_NUMERICAL
            })
        }
    }
}
