//! Command-line driver: single-scenario runs, axis sweeps, the
//! small-instance oracle gap study, and optimizer convergence traces.
//!
//! Configuration is plain `key = value` text (`#` comments); any scenario
//! or experiment key can appear. `--seed` overrides the config seed,
//! `--reps` the replication count, and the output directory resolves as
//! `--out-dir` flag, then the `CRNOMA_OUT_DIR` environment variable, then
//! `./out`.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crnoma_core::report::{
    fmt_sig, write_availability_csv, write_gap_csv, write_pairing_csv, write_topology_csv,
    write_trace_csv,
};
use crnoma_core::sim::{format_axis_value, run_batch};
use crnoma_core::{
    convergence_trace, eval_pair, mix_seed, oracle_gap_study, run_pipeline_detail, run_sweep,
    ExperimentSpec, Scenario, Scheme,
};

const OUT_DIR_ENV: &str = "CRNOMA_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "crnoma",
    version,
    about = "Energy-efficiency simulator for paired uplink transmitters on opportunistically sensed channels"
)]
struct Cli {
    /// Plain-text `key = value` configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Base RNG seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (overrides the CRNOMA_OUT_DIR environment variable).
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    /// Replication count (overrides the config file).
    #[arg(long, global = true)]
    reps: Option<usize>,

    /// Worker threads for replication batches (default: one per CPU).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every scheme on one scenario and print mean EE per scheme.
    ///
    /// With an output directory, also writes the first replication's
    /// topology, availability, and optimized pairing as CSV.
    Run {
        /// Write topology/availability/pairing CSVs for replication 0.
        #[arg(long)]
        artifacts: bool,
    },
    /// Sweep one axis and write results.csv plus aggregate.csv.
    Sweep,
    /// Compare the pairing search against the exhaustive oracle on small
    /// instances and write the per-instance gap table.
    Oracle {
        /// Users per instance (even, at most the enumeration bound).
        #[arg(long, default_value_t = 6)]
        n: usize,
        /// Channels per instance (at most the enumeration bound).
        #[arg(long, default_value_t = 4)]
        m: usize,
        /// Number of seeded instances.
        #[arg(long, default_value_t = 50)]
        instances: usize,
        /// Per-entry channel availability probability.
        #[arg(long, default_value_t = 0.8)]
        q: f64,
    },
    /// Run the pairing search once and write its best-fitness trace CSV.
    Trace,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let spec = load_spec(&cli)?;
    let out_dir = resolve_out_dir(&cli);
    match cli.command {
        Command::Run { artifacts } => run_cmd(&cli, &spec, &out_dir, artifacts),
        Command::Sweep => sweep_cmd(&cli, &spec, &out_dir),
        Command::Oracle { n, m, instances, q } => oracle_cmd(&spec, &out_dir, n, m, instances, q),
        Command::Trace => trace_cmd(&spec, &out_dir),
    }
}

fn load_spec(cli: &Cli) -> Result<ExperimentSpec> {
    let mut spec = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read config file `{}`", path.display()))?;
            ExperimentSpec::from_config_text(&text)
                .with_context(|| format!("invalid config `{}`", path.display()))?
        }
        None => ExperimentSpec::default(),
    };
    if let Some(seed) = cli.seed {
        spec.base_seed = seed;
        spec.scenario.rng_seed = seed;
    }
    if let Some(reps) = cli.reps {
        spec.replications = reps;
        spec.validate().context("invalid replication override")?;
    }
    Ok(spec)
}

fn resolve_out_dir(cli: &Cli) -> PathBuf {
    cli.out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn run_cmd(cli: &Cli, spec: &ExperimentSpec, out_dir: &PathBuf, artifacts: bool) -> Result<()> {
    let scenario = &spec.scenario;
    let seeds: Vec<u64> = (0..spec.replications as u64)
        .map(|rep| mix_seed(spec.base_seed, scenario.snr_db, rep))
        .collect();
    let _ = cli.workers; // batch parallelism is feature-controlled
    let batch = run_batch(scenario, &Scheme::ALL, &seeds, &spec.tuning)?;

    println!(
        "scenario: {} users, {} channels, SNR {} dB, {} replications",
        scenario.n_users, scenario.m_channels, scenario.snr_db, spec.replications
    );
    println!("{:<10} {:>12} {:>9}", "scheme", "mean_ee", "feasible");
    for (i, scheme) in Scheme::ALL.iter().enumerate() {
        let mean = batch.iter().map(|r| r[i].ee).sum::<f64>() / batch.len() as f64;
        let feasible = batch.iter().filter(|r| r[i].feasible).count();
        println!(
            "{:<10} {:>12} {:>6}/{}",
            scheme.name(),
            fmt_sig(mean, 6),
            feasible,
            batch.len()
        );
    }

    if artifacts {
        fs::create_dir_all(out_dir)
            .with_context(|| format!("cannot create output directory `{}`", out_dir.display()))?;
        let detail = run_pipeline_detail(scenario, seeds[0], &spec.tuning)?;
        write_topology_csv(&out_dir.join("topology.csv"), &detail.topology)?;
        write_availability_csv(&out_dir.join("availability.csv"), &detail.avail)?;
        let evals: Vec<_> = detail
            .zouppa_pairing
            .pairs
            .iter()
            .zip(&detail.zouppa_allocation.records)
            .map(|(&(s, w), rec)| {
                eval_pair(
                    scenario.snr_linear(),
                    detail.topology.gains[s],
                    detail.topology.gains[w],
                    rec.delta_strong,
                    rec.delta_weak,
                    rec.pair_power,
                )
            })
            .collect();
        write_pairing_csv(&out_dir.join("pairing.csv"), &detail.zouppa_pairing, &evals)?;
        println!(
            "wrote topology.csv, availability.csv, pairing.csv to {}",
            out_dir.display()
        );
    }
    Ok(())
}

fn sweep_cmd(cli: &Cli, spec: &ExperimentSpec, out_dir: &PathBuf) -> Result<()> {
    let summary = run_sweep(spec, out_dir, cli.workers)?;
    println!(
        "axis {}: {} values × {} schemes × {} replications",
        spec.axis.name(),
        spec.axis_values.len(),
        spec.schemes.len(),
        spec.replications
    );
    println!(
        "{} rows computed, {} resumed → {}",
        summary.rows_written,
        summary.rows_resumed,
        summary.results_path.display()
    );
    println!("aggregates → {}", summary.aggregate_path.display());
    for a in &summary.aggregates {
        println!(
            "  {} = {:<8} {:<10} mean {} (σ {})",
            spec.axis.name(),
            format_axis_value(a.axis_value),
            a.scheme.name(),
            fmt_sig(a.mean_ee, 6),
            fmt_sig(a.std_ee, 6)
        );
    }
    Ok(())
}

fn oracle_cmd(
    spec: &ExperimentSpec,
    out_dir: &PathBuf,
    n: usize,
    m: usize,
    instances: usize,
    q: f64,
) -> Result<()> {
    let scenario = Scenario {
        n_users: n,
        m_channels: m,
        availability_prob: q,
        ..spec.scenario.clone()
    };
    let rows = oracle_gap_study(&scenario, instances, &spec.tuning)?;

    fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory `{}`", out_dir.display()))?;
    let path = out_dir.join("oracle_gaps.csv");
    write_gap_csv(&path, &rows)?;

    let feasible = rows.iter().filter(|r| r.feasible).count();
    let within = rows.iter().filter(|r| !r.feasible || r.gap <= 0.02).count();
    let worst = rows.iter().map(|r| r.gap).fold(0.0f64, f64::max);
    println!(
        "{within}/{instances} instances within 2% of the exhaustive optimum ({feasible} feasible, worst gap {})",
        fmt_sig(worst, 6)
    );
    println!("gap table → {}", path.display());
    Ok(())
}

fn trace_cmd(spec: &ExperimentSpec, out_dir: &PathBuf) -> Result<()> {
    let seed = mix_seed(spec.base_seed, spec.scenario.snr_db, 0);
    let trace = convergence_trace(&spec.scenario, seed, &spec.tuning)?;
    fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory `{}`", out_dir.display()))?;
    let path = out_dir.join("trace.csv");
    write_trace_csv(&path, &trace)?;
    println!(
        "{} iterations, best fitness {} → {}",
        trace.len() - 1,
        fmt_sig(*trace.last().unwrap(), 6),
        path.display()
    );
    Ok(())
}
