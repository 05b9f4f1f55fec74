use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gefsamp::harness::{read_records, render, run_experiment, selftest, ExperimentConfig, Kind, ReportFormat};
use gefsamp::Error;

const EXIT_GATE_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "gefsamp", version, about = "Seeded experiments on Gaussian entire function zero sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write JSON-lines records.
    Run(RunArgs),
    /// Summarise a records file as CSV or long-format plot data.
    Report(ReportArgs),
    /// Run the quick built-in example checks.
    Selftest,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    config: PathBuf,
    #[arg(long)]
    kind: Option<Kind>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    /// Worker threads (overrides GEFSAMP_JOBS and the config).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    intensity: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    /// Output records path.
    #[arg(long)]
    output: Option<String>,
    /// Extra tolerance / knob, `name=value` (repeatable).
    #[arg(long = "set", value_parser = parse_setting)]
    set: Vec<(String, f64)>,
}

#[derive(Args)]
struct ReportArgs {
    records: PathBuf,
    #[arg(long, default_value = "csv")]
    format: ReportFormat,
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_setting(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got '{s}'"))?;
    let v: f64 = v.parse().map_err(|e| format!("bad value in '{s}': {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn env_jobs() -> Result<Option<usize>, Error> {
    match std::env::var("GEFSAMP_JOBS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|j| *j > 0)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("GEFSAMP_JOBS must be a positive integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

fn run(args: RunArgs) -> Result<u8, Error> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(k) = args.kind {
        cfg.kind = k;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.master_seed {
        cfg.master_seed = s;
    }
    cfg.intensity = args.intensity.or(cfg.intensity);
    cfg.radius = args.radius.or(cfg.radius);
    cfg.degree = args.degree.or(cfg.degree);
    cfg.p = args.p.or(cfg.p);
    if let Some(o) = args.output {
        cfg.output_path = o;
    }
    cfg.tolerances.extend(args.set);
    let jobs = match (args.jobs, env_jobs()?, cfg.jobs) {
        (Some(0), ..) => return Err(Error::Config("--jobs must be positive".into())),
        (Some(j), ..) | (None, Some(j), _) | (None, None, Some(j)) => j,
        (None, None, None) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let out = run_experiment(&cfg, jobs)?;
    let path = PathBuf::from(&cfg.output_path);
    out.write(&path)?;
    let s = &out.summary;
    println!("{} trials of {} ({} errors) -> {}", s.trials, s.kind, s.errors, path.display());
    for (name, m) in &s.metrics {
        println!("  {name:<28} mean {:>12.6e}  se {:>10.3e}  median {:>12.6e}", m.mean, m.std_err, m.median);
    }
    for (name, v) in &s.extras {
        println!("  {name:<28} {v:.6}");
    }
    for (name, r) in &s.pass_rates {
        println!("  pass rate {name:<18} {r:.3}");
    }
    for (name, g) in &s.gates {
        println!("  gate {name:<23} {}", if *g { "PASS" } else { "FAIL" });
    }
    Ok(if out.passed() { 0 } else { EXIT_GATE_FAIL })
}

fn report(args: ReportArgs) -> Result<u8, Error> {
    let records = read_records(&args.records)?;
    if records.skipped > 0 {
        eprintln!("skipped {} malformed line(s)", records.skipped);
    }
    let text = render(&records, args.format)?;
    match args.output {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn self_test() -> u8 {
    let results = selftest();
    let failed = results.iter().filter(|r| !r.pass).count();
    for r in &results {
        let tag = if r.pass { "PASS" } else { "FAIL" };
        match &r.detail {
            Some(d) => println!("{tag} {} ({d})", r.name),
            None => println!("{tag} {}", r.name),
        }
    }
    println!("{} checks, {failed} failed", results.len());
    if failed == 0 {
        0
    } else {
        EXIT_GATE_FAIL
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Report(a) => report(a),
        Command::Selftest => Ok(self_test()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
