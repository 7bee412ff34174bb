use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use discord_witness::oracle::{classicality_distance, OracleConfig};
use discord_witness::selftest::run_selftest;
use discord_witness::states::parse_state_text;
use discord_witness::sweep::{
    certify_candidates, derivative_scan, find_classical_points, format_series, read_csv, run_sweep,
    SweepSpec, Stencil, CSV_COLUMNS,
};
use discord_witness::witness::witness_norm;
use discord_witness::{Error, Result};

#[derive(Parser)]
#[command(name = "discord-witness", version, about = "Nonclassicality witness sweeps for XY and Ashkin-Teller chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the witness along a parameter grid and write CSV rows.
    Sweep(SweepArgs),
    /// Finite-difference derivative of the witness column of a sweep CSV.
    Derivative {
        input: PathBuf,
        #[arg(long, default_value = "central-2")]
        stencil: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Local witness minima below a threshold.
    Classify {
        input: PathBuf,
        #[arg(long, default_value_t = 1e-5)]
        threshold: f64,
        /// Recompute candidate states and attach oracle distances.
        #[arg(long)]
        certify: bool,
    },
    /// Classicality distance of a state read from a text file.
    Oracle {
        state: PathBuf,
        #[arg(long, default_value_t = 24)]
        coarse_grid: usize,
        #[arg(long, default_value_t = 60)]
        refine_iterations: usize,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the built-in invariant checks.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// key=value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    /// Swept parameter: lambda, gamma, beta or delta.
    #[arg(long)]
    param: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    stop: Option<String>,
    #[arg(long)]
    lambda_start: Option<String>,
    #[arg(long)]
    lambda_stop: Option<String>,
    #[arg(long)]
    beta_start: Option<String>,
    #[arg(long)]
    beta_stop: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    n_spins: Option<String>,
    /// pair, quartet, octet or spin indices such as 0:1:2.
    #[arg(long)]
    block: Option<String>,
    #[arg(long)]
    ground_state: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    /// Also compute the brute-force classicality distance per row.
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    n_modes: Option<String>,
}

impl SweepArgs {
    fn spec(&self) -> Result<SweepSpec> {
        let mut spec = SweepSpec::default();
        if let Some(path) = &self.config {
            spec.apply_config(&std::fs::read_to_string(path)?)?;
        }
        let flags = [
            ("model", &self.model),
            ("param", &self.param),
            ("start", &self.start),
            ("stop", &self.stop),
            ("lambda_start", &self.lambda_start),
            ("lambda_stop", &self.lambda_stop),
            ("beta_start", &self.beta_start),
            ("beta_stop", &self.beta_stop),
            ("steps", &self.steps),
            ("gamma", &self.gamma),
            ("lambda", &self.lambda),
            ("beta", &self.beta),
            ("delta", &self.delta),
            ("n_spins", &self.n_spins),
            ("block", &self.block),
            ("ground_state", &self.ground_state),
            ("out", &self.out),
            ("seed", &self.seed),
            ("workers", &self.workers),
            ("n_modes", &self.n_modes),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                spec.set(k, v)?;
            }
        }
        if self.oracle {
            spec.oracle = true;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn sweep(args: &SweepArgs) -> Result<u8> {
    let spec = args.spec()?;
    let outcome = run_sweep(&spec)?;
    if spec.out.is_none() {
        println!("{}", spec.header());
        println!("{CSV_COLUMNS}");
        for r in &outcome.rows {
            println!("{}", r.to_csv());
        }
    } else {
        eprintln!("{} rows ({} resumed)", outcome.rows.len(), outcome.resumed);
    }
    for (x, e) in &outcome.failures {
        eprintln!("failed at {x}: {e}");
    }
    Ok(if outcome.failures.is_empty() { 0 } else { 3 })
}

/// Spec encoded in a sweep CSV header.
fn spec_from_header(header: &str) -> Result<SweepSpec> {
    let body = header.trim_start_matches('#').trim();
    let body = body.strip_prefix("spec=").ok_or_else(|| Error::Parse("header lacks spec=".into()))?;
    let mut spec = SweepSpec::default();
    for tok in body.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| Error::Parse(format!("bad header token '{tok}'")))?;
        spec.set(k, v)?;
    }
    Ok(spec)
}

fn derivative(input: &PathBuf, stencil: &str, out: Option<&PathBuf>) -> Result<u8> {
    let stencil = Stencil::parse(stencil)?;
    let (_, rows) = read_csv(input)?;
    let xs: Vec<f64> = rows.iter().map(|r| r.param).collect();
    let ws: Vec<f64> = rows.iter().map(|r| r.witness.unwrap_or(f64::NAN)).collect();
    let d = derivative_scan(&xs, &ws, stencil)?;
    let text = format_series(&xs, &d, "param,d_witness");
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn classify(input: &PathBuf, threshold: f64, certify: bool) -> Result<u8> {
    let (header, rows) = read_csv(input)?;
    let xs: Vec<f64> = rows.iter().map(|r| r.param).collect();
    let ws: Vec<f64> = rows.iter().map(|r| r.witness.unwrap_or(f64::NAN)).collect();
    let mut found = find_classical_points(&xs, &ws, threshold);
    for c in found.iter_mut() {
        c.distance = rows[c.index].oracle_distance;
    }
    if certify {
        let header = header.ok_or_else(|| Error::Parse("certification needs the spec header".into()))?;
        certify_candidates(&spec_from_header(&header)?, &mut found)?;
    }
    println!("param,witness_norm,oracle_distance");
    for c in &found {
        let d = c.distance.map(|d| format!("{d:.16e}")).unwrap_or_default();
        println!("{:.16e},{:.16e},{d}", c.param, c.witness);
    }
    Ok(0)
}

fn oracle(state: &PathBuf, cfg: OracleConfig) -> Result<u8> {
    let rho = parse_state_text(&std::fs::read_to_string(state)?)?;
    let r = classicality_distance(&rho, &cfg)?;
    println!("distance {:.16e}", r.value);
    if let Some(g) = r.grid_min {
        println!("grid_min {g:.16e}");
    }
    println!("witness {:.16e}", witness_norm(&rho)?);
    for (k, (t, p)) in r.angles.as_slice().iter().enumerate() {
        println!("party {k} theta {t:.12} phi {p:.12}");
    }
    Ok(0)
}

fn selftest(seed: u64) -> Result<u8> {
    let checks = run_selftest(seed);
    for c in &checks {
        println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(if checks.iter().all(|c| c.passed) { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Derivative { input, stencil, out } => derivative(input, stencil, out.as_ref()),
        Command::Classify { input, threshold, certify } => classify(input, *threshold, *certify),
        Command::Oracle { state, coarse_grid, refine_iterations, restarts, tol, seed } => oracle(
            state,
            OracleConfig {
                coarse_grid: *coarse_grid,
                refine_iterations: *refine_iterations,
                restarts: *restarts,
                tol: *tol,
                seed: *seed,
            },
        ),
        Command::Selftest { seed } => selftest(*seed),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
