//! Command-line front end: simulate games, verify the proof inequalities,
//! evaluate the tail bound, and run the oracle comparison.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hoeffding_game::bounds::{hoeffding_bound, monte_carlo_frequency, DeviationEvent};
use hoeffding_game::config::{GameConfig, ScepticSpec};
use hoeffding_game::oracle::{sandwich_report, DiscretizedGame};
use hoeffding_game::protocol::Forecast;
use hoeffding_game::strategies::{run_game, HedgeParams, HoeffdingHedge, NoBet, ScepticStrategy};
use hoeffding_game::supermartingale::{grid_verification, hoeffding_log_process};

#[derive(Parser)]
#[command(name = "hoeffding-game", about = "Forecasting game simulator, bound calculator, and oracle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Play a configured game and write trace and ledger files.
    Simulate {
        /// Game config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for trace.jsonl and ledger.jsonl.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep every proof inequality over the documented grid.
    Verify {
        /// Number of fuzzed tuples on top of the grid.
        #[arg(long, default_value_t = 100_000)]
        fuzz: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Relative slack tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Negative control for the test harness: inject a failing row.
        #[arg(long, hide = true, default_value_t = false)]
        self_test_corrupt: bool,
    },
    /// Evaluate the tail bound exp(-2 N^2 t^2 / C).
    Bound(BoundArgs),
    /// Sandwich comparison: oracle value vs strategy value vs bound.
    Oracle {
        #[arg(long)]
        horizon: usize,
        #[arg(long, allow_hyphen_values = true)]
        lower: f64,
        #[arg(long)]
        upper: f64,
        #[arg(long, allow_hyphen_values = true)]
        mean: f64,
        /// Outcome grid points per round.
        #[arg(long, default_value_t = 3)]
        grid_size: usize,
        /// Event thresholds; one sandwich per value.
        #[arg(long, value_delimiter = ',', required = true)]
        threshold: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Estimate event frequency by seeded Monte Carlo and compare to the bound.
    Montecarlo {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, default_value_t = 100_000)]
        replicates: u64,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the JSON report here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    horizon: usize,
    #[arg(long)]
    threshold: f64,
    /// C directly; mutually exclusive with --widths.
    #[arg(long, conflicts_with = "widths")]
    c_total: Option<f64>,
    /// Per-round interval widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    widths: Option<Vec<f64>>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: &PathBuf) -> Result<GameConfig, Box<dyn std::error::Error>> {
    let file = File::open(path)?;
    let config: GameConfig = serde_json::from_reader(BufReader::new(file))?;
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let mut config = load_config(&config)?;
            if let Some(seed) = seed {
                config.master_seed = seed;
            }
            let h = config.hedge_h()?;
            let sceptic: Box<dyn ScepticStrategy> = match config.sceptic {
                ScepticSpec::NoBet => Box::new(NoBet),
                _ => Box::new(HoeffdingHedge { params: HedgeParams::new(h) }),
            };
            let (trace, ledger) = run_game(&config, sceptic.as_ref())?;
            std::fs::create_dir_all(&out)?;
            let trace_path = out.join("trace.jsonl");
            let ledger_path = out.join("ledger.jsonl");
            hoeffding_game::io::write_trace(BufWriter::new(File::create(&trace_path)?), &trace)?;
            hoeffding_game::io::write_ledger(
                BufWriter::new(File::create(&ledger_path)?),
                &trace,
                &ledger,
            )?;
            let floor = ledger.initial() * hoeffding_log_process(&trace, h).exp();
            println!("final_capital {:.17e}", ledger.capital());
            println!("wealth_process_floor {:.17e}", floor);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { fuzz, seed, tol, self_test_corrupt } => {
            let mut report = grid_verification(fuzz, seed);
            report.rel_tol = tol;
            if self_test_corrupt {
                report.goal.slack = -1.0;
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
            if report.passes() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!(
                    "verification failed: worst goal slack {} at a={} b={} h={} x={}",
                    report.goal.slack, report.goal.a, report.goal.b, report.goal.h, report.goal.x
                );
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Bound(args) => {
            let event = DeviationEvent::new(args.horizon, args.threshold)?;
            let c = match (args.c_total, args.widths) {
                (Some(c), None) => c,
                (None, Some(widths)) => {
                    if widths.len() != args.horizon {
                        return Err(format!(
                            "{} widths for horizon {}",
                            widths.len(),
                            args.horizon
                        )
                        .into());
                    }
                    widths.iter().map(|w| w * w).sum()
                }
                _ => return Err("provide exactly one of --c-total or --widths".into()),
            };
            let report = hoeffding_bound(&event, c)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { horizon, lower, upper, mean, grid_size, threshold, format, tol } => {
            let forecast = Forecast::new(lower, upper, mean)?;
            let game = DiscretizedGame::uniform(forecast, horizon, grid_size)?;
            let mut all_ordered = true;
            let mut rows = Vec::new();
            for &t in &threshold {
                let event = DeviationEvent::new(horizon, t)?;
                let report = sandwich_report(&game, &event, tol)?;
                all_ordered &= report.ordered;
                rows.push((t, report));
            }
            match format {
                Format::Json => {
                    #[derive(Serialize)]
                    struct Row {
                        t: f64,
                        #[serde(flatten)]
                        report: hoeffding_game::oracle::SandwichReport,
                    }
                    #[derive(Serialize)]
                    struct OracleOutput {
                        #[serde(rename = "N")]
                        n: usize,
                        m: usize,
                        grid: Vec<f64>,
                        results: Vec<Row>,
                    }
                    let output = OracleOutput {
                        n: horizon,
                        m: grid_size,
                        grid: game.grids().first().cloned().unwrap_or_default(),
                        results: rows.into_iter().map(|(t, report)| Row { t, report }).collect(),
                    };
                    println!("{}", serde_json::to_string_pretty(&output)?);
                }
                Format::Csv => {
                    println!("t,upper_probability,strategy_value,hoeffding_bound,optimal_h,ordered");
                    for (t, r) in &rows {
                        println!(
                            "{t},{},{},{},{},{}",
                            r.upper_probability,
                            r.strategy_value,
                            r.hoeffding_bound,
                            r.optimal_h,
                            r.ordered
                        );
                    }
                }
            }
            println!("sandwich {}", if all_ordered { "PASS" } else { "FAIL" });
            Ok(if all_ordered { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Montecarlo { config, threshold, replicates, seed, out } => {
            let mut config = load_config(&config)?;
            if let Some(seed) = seed {
                config.master_seed = seed;
            }
            let event = match threshold {
                Some(t) => DeviationEvent::new(config.horizon, t)?,
                None => config.event.ok_or("config has no event; pass --threshold")?,
            };
            let c = config.forecasts.c_total(config.horizon)?;
            let bound = hoeffding_bound(&event, c)?;
            let est = monte_carlo_frequency(&config, &event, replicates, config.master_seed)?;
            #[derive(Serialize)]
            struct McReport {
                #[serde(rename = "N")]
                n: usize,
                t: f64,
                #[serde(rename = "C")]
                c: f64,
                optimal_h: f64,
                bound: f64,
                log_bound: f64,
                frequency: f64,
                stderr: f64,
                replicates: u64,
                seed: u64,
            }
            let report = McReport {
                n: config.horizon,
                t: event.threshold,
                c,
                optimal_h: bound.optimal_h,
                bound: bound.bound,
                log_bound: bound.log_bound,
                frequency: est.frequency,
                stderr: est.stderr,
                replicates,
                seed: config.master_seed,
            };
            let text = serde_json::to_string_pretty(&report)?;
            println!("{text}");
            if let Some(path) = out {
                let mut file = File::create(path)?;
                file.write_all(text.as_bytes())?;
                file.write_all(b"\n")?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
