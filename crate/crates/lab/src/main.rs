use clap::{CommandFactory, Parser, Subcommand};
use scatterlab::report::{emit_report, RunReport};
use scatterlab::scenario::Family;
use scatterlab::{load_scenario, run_all, run_scenario, scenario_files, thread_cap, RunError};
use std::path::PathBuf;
use std::process::ExitCode;

const PASS: u8 = 0;
const CHECK_FAIL: u8 = 1;
const CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "scatterlab", version, about = "Run scattering-theory scenarios and check them")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory receiving one output subdirectory per scenario.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Reject unknown keys instead of warning about them.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// DFT round trips, free Gaussian evolution, Plancherel and far fields.
    Evolve(One),
    /// Local-time defect for free, scattering and bound states.
    Localtime(One),
    /// Decay slopes of the free propagation estimates.
    Propdecay(One),
    /// Cook and modified wave operators.
    Waveop(One),
    /// Eikonal phases and classical orbits.
    Eikonal(One),
    /// Many-body partition of unity.
    Partition(One),
    /// Position/momentum and time/energy uncertainty.
    Uncertainty(One),
    /// Born and Rutherford cross sections, relativistic factors, clocks.
    Xsection(One),
    /// Local-motion witness on finite models.
    Localmotion(One),
    /// Every scenario file in a directory.
    All(Many),
}

#[derive(clap::Args)]
struct One {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(clap::Args)]
struct Many {
    /// Directory of scenario files.
    #[arg(long)]
    scenario: PathBuf,
}

fn finish(reports: &[RunReport]) -> u8 {
    for r in reports {
        print!("{}", emit_report(r));
    }
    match reports.iter().find_map(|r| r.first_failure().map(|c| (r, c))) {
        None => PASS,
        Some((r, c)) => {
            eprintln!("FAIL: first failing check {} in scenario {}", c.name, r.scenario);
            CHECK_FAIL
        }
    }
}

fn error(e: &RunError) -> u8 {
    eprintln!("error: {e}");
    if e.is_config() {
        CONFIG
    } else {
        CHECK_FAIL
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = thread_cap();
    let single = |one: &One, family: Family| -> u8 {
        let parsed = match load_scenario(&one.scenario, cli.strict, cli.seed) {
            Ok(p) => p,
            Err(e) => return error(&e),
        };
        for key in &parsed.unknown {
            eprintln!("warning: unknown key {key} ignored (use --strict to reject)");
        }
        if parsed.scenario.family() != family {
            eprintln!(
                "error: {}: scenario has a [{}] section, not [{}]",
                one.scenario.display(),
                parsed.scenario.family().section(),
                family.section()
            );
            return CONFIG;
        }
        match run_scenario(&parsed, &cli.out, threads) {
            Ok(r) => finish(&[r]),
            Err(e) => error(&e),
        }
    };
    let code = match &cli.command {
        Command::Evolve(o) => single(o, Family::Evolve),
        Command::Localtime(o) => single(o, Family::LocalTime),
        Command::Propdecay(o) => single(o, Family::PropDecay),
        Command::Waveop(o) => single(o, Family::WaveOp),
        Command::Eikonal(o) => single(o, Family::Eikonal),
        Command::Partition(o) => single(o, Family::Partition),
        Command::Uncertainty(o) => single(o, Family::Uncertainty),
        Command::Xsection(o) => single(o, Family::XSection),
        Command::Localmotion(o) => single(o, Family::LocalMotion),
        Command::All(m) => {
            let files = match scenario_files(&m.scenario) {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("error: {}: {e}", m.scenario.display());
                    return ExitCode::from(CONFIG);
                }
            };
            if files.is_empty() {
                eprintln!("error: no scenario files (*.toml) in {}\n", m.scenario.display());
                let _ = Cli::command().find_subcommand_mut("all").expect("subcommand").print_help();
                return ExitCode::from(CONFIG);
            }
            match run_all(&files, &cli.out, cli.strict, cli.seed, threads) {
                Err(e) => error(&e),
                Ok(results) => {
                    let mut reports = Vec::new();
                    let mut code = PASS;
                    for r in results {
                        match r {
                            Ok(r) => reports.push(r),
                            Err(e) => code = code.max(error(&e)),
                        }
                    }
                    code.max(finish(&reports))
                }
            }
        }
    };
    ExitCode::from(code)
}
