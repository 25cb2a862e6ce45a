use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sparse_al::harness::{
    self, properties, record::to_csv_string, summary_table, ExperimentConfig, SweepGrid, SweepOutcome,
};
use sparse_al::{Error, Execution};

/// Attribute-efficient active learning of sparse halfspaces: experiment runner.
#[derive(Parser, Debug)]
#[command(name = "sparse-al", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the base config (no grid) for every seed.
    Run(RunArgs),
    /// Run every grid cell for every seed.
    Sweep(RunArgs),
    /// Run the randomized invariant suites.
    Properties(PropertiesArgs),
    /// Grid search over the algorithm constants.
    Tune(TuneArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Config file (TOML, or JSON when the name ends in .json).
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Comma-separated seeds, overriding the config.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Run trials one after another on the calling thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// CSV output path, overriding the config. Without one the CSV goes to stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Print median/IQR tables.
    #[arg(long)]
    summary: bool,
}

#[derive(Args, Debug)]
struct PropertiesArgs {
    #[arg(long, default_value_t = 10_000)]
    cases: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Only run properties whose name contains this string.
    #[arg(long)]
    filter: Option<String>,
    /// Directory for JSON dumps of failing cases.
    #[arg(long, default_value = "property-failures")]
    dump_dir: PathBuf,
    /// List property names and exit.
    #[arg(long)]
    list: bool,
}

#[derive(Args, Debug)]
struct TuneArgs {
    #[command(flatten)]
    common: Common,
    /// Write the full report as JSON.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Print the candidate table.
    #[arg(long)]
    summary: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args, false),
        Command::Sweep(args) => run(args, true),
        Command::Properties(args) => run_properties(args),
        Command::Tune(args) => run_tune(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Parameter(_) | Error::Config(_) => 1,
                _ => 3,
            })
        }
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_path(path).map_err(|e| match e {
            Error::Io(io) => Error::Config(format!("{}: {io}", path.display())),
            other => other,
        })?,
        None => ExperimentConfig::default(),
    };
    if let Some(seeds) = &common.seeds {
        cfg.seeds = seeds.clone();
    }
    if common.sequential {
        cfg.execution = Execution::Sequential;
    }
    Ok(cfg)
}

fn run(args: RunArgs, grid: bool) -> Result<ExitCode, Error> {
    let mut cfg = load(&args.common)?;
    if args.output.is_some() {
        cfg.output = args.output;
    }
    // A single run fails fast on bad parameters; sweeps record failed cells.
    if !grid {
        cfg.grid = SweepGrid::default();
        cfg.validate()?;
    }
    let outcome = harness::sweep(&cfg)?;
    let rows = outcome.rows();
    match &cfg.output {
        Some(path) => eprintln!("wrote {} rows to {}", rows.len(), path.display()),
        None => print!("{}", to_csv_string(&rows)?),
    }
    if args.summary {
        print!("{}", summary_table(&rows));
    }
    Ok(report_failures(&outcome))
}

fn report_failures(outcome: &SweepOutcome) -> ExitCode {
    if outcome.failures == 0 {
        return ExitCode::SUCCESS;
    }
    eprintln!("{} of {} trials failed", outcome.failures, outcome.records.len());
    for r in outcome.records.iter().filter(|r| !r.is_ok()) {
        eprintln!("  seed {} {:?} d={} t={}: {}", r.row.seed, r.row.algorithm, r.row.d, r.row.t, r.row.status);
    }
    ExitCode::from(2)
}

fn run_properties(args: PropertiesArgs) -> Result<ExitCode, Error> {
    if args.list {
        for name in properties::property_names() {
            println!("{name}");
        }
        return Ok(ExitCode::SUCCESS);
    }
    if args.cases == 0 {
        return Err(Error::Parameter("--cases must be positive".into()));
    }
    let reports = harness::run_properties(args.cases, args.seed, args.filter.as_deref());
    if reports.is_empty() {
        return Err(Error::Parameter("no property matches the filter".into()));
    }
    for r in &reports {
        let verdict = if r.passed() { "ok" } else { "FAILED" };
        println!("{:<40} {:>7} cases {:>6} failures  {verdict}", r.name, r.cases, r.failures);
    }
    let written = harness::write_dumps(&reports, &args.dump_dir)?;
    for path in &written {
        eprintln!("failure dump: {}", path.display());
    }
    Ok(if written.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn run_tune(args: TuneArgs) -> Result<ExitCode, Error> {
    let cfg = load(&args.common)?;
    let report = harness::tune(&cfg)?;
    if args.summary {
        print!("{}", harness::tune_table(&report));
    }
    if !report.meets_target {
        eprintln!(
            "no candidate reached success and invariant rates of {}; showing the best success rate",
            cfg.tune.success_target
        );
    }
    print!("{}", harness::recommended_toml(&report));
    if let Some(path) = &args.output {
        write_json(path, &report)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn write_json(path: &Path, report: &harness::TuneReport) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(report).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}
