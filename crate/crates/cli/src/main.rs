use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod scenario;

use config::{Overrides, Scenario};
use scenario::{ScenarioOutcome, CSV_HEADER};

const HEADLINE: &str = include_str!("../scenarios/headline.toml");

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_BAD_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "kcycle",
    version,
    about = "Play and verify the k-cycle game over quantum processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for every randomized check, replacing the config's.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trial count for every sampled check, replacing the config's.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Write p(a|s,x) of every game check to this CSV file.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Print only the PASS/FAIL lines.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenarios in a TOML config.
    Run { config: PathBuf },
    /// Run the acceptance suite and the built-in scenarios.
    ReproduceAll,
    /// List the built-in scenarios.
    ListScenarios,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        seed: cli.seed,
        trials: cli.trials,
    };
    match &cli.command {
        Command::Run { config } => {
            let text = match std::fs::read_to_string(config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("config: cannot read {}: {e}", config.display());
                    return ExitCode::from(EXIT_BAD_CONFIG);
                }
            };
            match config::parse(&text, overrides) {
                Ok(scenarios) => run(&cli, &scenarios),
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(EXIT_BAD_CONFIG)
                }
            }
        }
        Command::ReproduceAll => reproduce_all(&cli, overrides),
        Command::ListScenarios => {
            let scenarios =
                config::parse(HEADLINE, overrides).expect("built-in scenarios are valid");
            for s in &scenarios {
                let checks: Vec<&str> = s.checks.iter().map(|c| c.as_str()).collect();
                println!(
                    "{:<22} {:<9} k={} {:<26} {}",
                    s.name,
                    s.process.as_str(),
                    s.k,
                    s.strategy
                        .as_ref()
                        .map(|x| x.to_string())
                        .unwrap_or_else(|| "-".to_string()),
                    checks.join(",")
                );
            }
            ExitCode::SUCCESS
        }
    }
}

fn run(cli: &Cli, scenarios: &[Scenario]) -> ExitCode {
    let outcomes = scenario::run_all(scenarios);
    print_outcomes(&outcomes, cli.quiet);
    let checks: usize = outcomes.iter().map(|o| o.checks.len()).sum();
    let passed: usize = outcomes
        .iter()
        .map(|o| o.checks.iter().filter(|c| c.passed).count())
        .sum();
    println!("{passed} of {checks} checks passed");
    let wrote = write_csv(cli.csv.as_deref(), &outcomes);
    if passed == checks && wrote {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    }
}

fn print_outcomes(outcomes: &[ScenarioOutcome], quiet: bool) {
    for o in outcomes {
        if !quiet {
            for line in &o.report {
                println!("{line}");
            }
        }
        for line in o.summary_lines() {
            println!("{line}");
        }
    }
}

fn write_csv(path: Option<&Path>, outcomes: &[ScenarioOutcome]) -> bool {
    let Some(path) = path else {
        return true;
    };
    let result = (|| -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(CSV_HEADER)?;
        for row in outcomes.iter().flat_map(|o| &o.rows) {
            w.write_record(row.record())?;
        }
        w.flush()?;
        Ok(())
    })();
    match result {
        Ok(()) => true,
        Err(e) => {
            eprintln!("csv: cannot write {}: {e}", path.display());
            false
        }
    }
}

fn reproduce_all(cli: &Cli, overrides: Overrides) -> ExitCode {
    let criteria = match kcycle::suite::run_all() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("acceptance suite aborted: {e}");
            return ExitCode::from(EXIT_CHECK_FAILED);
        }
    };
    for c in &criteria {
        println!("{}", c.summary_line());
        if !cli.quiet {
            for d in &c.details {
                println!("       {d}");
            }
        }
    }

    let scenarios = config::parse(HEADLINE, overrides).expect("built-in scenarios are valid");
    let outcomes = scenario::run_all(&scenarios);
    if !cli.quiet {
        println!();
        println!("{:<22} {:>8} {:>8}  verdict", "scenario", "p_win", "bound");
        for o in &outcomes {
            if let Some(g) = &o.game {
                println!(
                    "{:<22} {:>8.6} {:>8.6}  {}",
                    o.name, g.p_win, g.bound, g.verdict
                );
            }
        }
        println!();
    }
    for o in &outcomes {
        for line in o.summary_lines() {
            println!("{line}");
        }
    }

    let criteria_passed = criteria.iter().filter(|c| c.passed).count();
    let checks: usize = outcomes.iter().map(|o| o.checks.len()).sum();
    let checks_passed: usize = outcomes
        .iter()
        .map(|o| o.checks.iter().filter(|c| c.passed).count())
        .sum();
    println!(
        "{criteria_passed} of {} criteria and {checks_passed} of {checks} scenario checks passed",
        criteria.len()
    );
    let wrote = write_csv(cli.csv.as_deref(), &outcomes);
    if criteria_passed == criteria.len() && checks_passed == checks && wrote {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    }
}
