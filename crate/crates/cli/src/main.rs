mod config;
mod experiments;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use config::{Config, Kind, RingSpec};
use experiments::Report;

#[derive(Parser)]
#[command(name = "ringlab", version, about = "Experiments on finite quotient rings of number-field integers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory (overrides the config `out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Largest ring order to build.
        #[arg(long)]
        capacity: Option<u128>,
    },
    /// Print a summary of a ring.
    Inspect {
        /// Builtin field label.
        #[arg(long, default_value = "Q")]
        field: String,
        /// Rational integer n; the ring is O/nO.
        #[arg(long, required_unless_present = "config")]
        modulus: Option<u64>,
        /// Read the ring from the `[ring]` table of a config instead.
        #[arg(long, conflicts_with = "modulus")]
        config: Option<PathBuf>,
        #[arg(long)]
        capacity: Option<u128>,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Assertion(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn write_outputs(dir: &Path, kind: Kind, seed: u64, report: &Report) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let mut body = csv::Writer::from_writer(Vec::new());
    body.write_record(&report.header)?;
    for row in &report.rows {
        body.write_record(row)?;
    }
    let body = body.into_inner().map_err(|e| anyhow!("csv: {e}"))?;
    let mut csv_text = format!("# ringlab {} seed={seed} generated_unix={stamp}\n", kind.name()).into_bytes();
    csv_text.extend(body);
    fs::write(dir.join(format!("{}.csv", kind.name())), csv_text)?;
    let summary = json!({
        "kind": kind.name(),
        "seed": seed,
        "passed": report.passed,
        "message": report.message,
        "report": report.summary,
    });
    fs::write(dir.join(format!("{}.json", kind.name())), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(())
}

fn run(config: &Path, seed: Option<u64>, threads: Option<usize>, out: Option<PathBuf>, capacity: Option<u128>) -> Result<(), Failure> {
    let cfg = Config::load(config)?;
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| anyhow!("thread pool: {e}"))?;
    }
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let capacity = capacity.or(cfg.capacity);
    let base = config.parent().unwrap_or(Path::new(".")).to_path_buf();
    let out = out.or_else(|| cfg.out.as_ref().map(|o| base.join(o))).unwrap_or_else(|| PathBuf::from("ringlab-out"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ring = match &cfg.ring {
        Some(spec) => Some(spec.build(capacity)?),
        None => None,
    };
    let need_ring = || ring.as_ref().ok_or_else(|| anyhow!("{} needs a [ring] table", cfg.kind.name()));
    let params = toml::Value::Table(cfg.params.clone());
    let report = match cfg.kind {
        Kind::Inspect => experiments::inspect(need_ring()?),
        Kind::Sumproduct => experiments::sumproduct(need_ring()?, params, seed),
        Kind::Decay => experiments::decay(need_ring()?, params, &mut rng, &base),
        Kind::Generation => experiments::generation(need_ring()?, params),
        Kind::Covering => experiments::covering(need_ring()?, params, &mut rng),
        Kind::Glueing => {
            let spec = cfg.ring.as_ref().ok_or_else(|| anyhow!("glueing needs a [ring] table"))?;
            experiments::glueing(spec.build(capacity)?, params, &mut rng, &base)
        }
        Kind::IdentitySuite => experiments::identity_suite(ring, params, &mut rng),
    }?;
    write_outputs(&out, cfg.kind, seed, &report)?;
    println!("{}", report.message);
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Assertion(format!(
            "{} assertion failed; witness in {}",
            cfg.kind.name(),
            out.join(format!("{}.json", cfg.kind.name())).display()
        )))
    }
}

fn inspect(field: String, modulus: Option<u64>, config: Option<PathBuf>, capacity: Option<u128>) -> Result<(), Failure> {
    let spec = match config {
        Some(path) => Config::load(&path)?
            .ring
            .ok_or_else(|| anyhow!("{} has no [ring] table", path.display()))?,
        None => RingSpec {
            field,
            custom: None,
            modulus,
            primes: None,
        },
    };
    let ring = spec.build(capacity)?;
    let report = experiments::inspect(&ring)?;
    println!("{}", report.message);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            threads,
            out,
            capacity,
        } => run(&config, seed, threads, out, capacity),
        Command::Inspect {
            field,
            modulus,
            config,
            capacity,
        } => inspect(field, modulus, config, capacity),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Assertion(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}
