//! Monte-Carlo experiment harness: replications, parameter sweeps, CSV
//! results, and the oracle gap study.
//!
//! One replication draws a topology and an availability matrix, then
//! evaluates every requested scheme on that shared realization (paired
//! comparison). Sweeps derive each point's seed from the base seed, the axis
//! value, and the replication index through a stated mixing function, so any
//! point can be recomputed in isolation and interrupted sweeps resume by
//! skipping completed (axis value, replication) keys. File content is
//! deterministic in (spec, base seed) regardless of the worker count; only
//! the wall-clock columns vary.

use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::availability::{generate_availability, AvailabilityMatrix};
use crate::error::{Error, Result};
use crate::pairing::{
    adjacent_pairing, evaluate_pairing, oma_baseline, random_pairing, upwo_pairing, zoup,
    Pairing, ZoupResult,
};
use crate::power::{zouppa, PowerAllocation, PowerRule};
use crate::report::fmt_sig;
use crate::scenario::{parse_kv, parse_num, Scenario};
use crate::topology::{generate_topology, Topology};
use crate::zoa::ZoaConfig;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// All evaluable schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// One user per channel, ½ pre-log rates.
    Oma,
    /// Uniformly random pairing, closed-form power split.
    Random,
    /// Adjacent-gain pairing, closed-form power split.
    Adjacent,
    /// Strong-half/weak-half pairing, closed-form power split.
    Upwo,
    /// Optimized pairing, closed-form power split.
    Zoup,
    /// Optimized pairing re-evaluated under the fixed preset split.
    ZoupFpa,
    /// Optimized pairing under the closed-form split (alias of `Zoup`,
    /// kept as a separate row for comparison tables).
    ZoupBpa,
    /// Optimized pairing followed by optimized power splits.
    Zouppa,
}

impl Scheme {
    /// Every scheme, in canonical reporting order.
    pub const ALL: [Scheme; 8] = [
        Scheme::Oma,
        Scheme::Random,
        Scheme::Adjacent,
        Scheme::Upwo,
        Scheme::Zoup,
        Scheme::ZoupFpa,
        Scheme::ZoupBpa,
        Scheme::Zouppa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Oma => "oma",
            Scheme::Random => "random",
            Scheme::Adjacent => "adjacent",
            Scheme::Upwo => "upwo",
            Scheme::Zoup => "zoup",
            Scheme::ZoupFpa => "zoup+fpa",
            Scheme::ZoupBpa => "zoup+bpa",
            Scheme::Zouppa => "zouppa",
        }
    }

    pub fn parse(s: &str) -> Result<Scheme> {
        Scheme::ALL
            .into_iter()
            .find(|scheme| scheme.name() == s)
            .ok_or_else(|| Error::InvalidParameter {
                name: "schemes",
                reason: format!(
                    "unknown scheme `{s}`; expected one of {}",
                    Scheme::ALL.map(Scheme::name).join(", ")
                ),
            })
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Sweepable scenario parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    SnrDb,
    Beta2,
    PathLossExp,
    NUsers,
    MChannels,
    CoverageRadius,
}

impl Axis {
    pub const ALL: [Axis; 6] = [
        Axis::SnrDb,
        Axis::Beta2,
        Axis::PathLossExp,
        Axis::NUsers,
        Axis::MChannels,
        Axis::CoverageRadius,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::SnrDb => "snr_db",
            Axis::Beta2 => "beta2",
            Axis::PathLossExp => "path_loss_exp",
            Axis::NUsers => "n_users",
            Axis::MChannels => "m_channels",
            Axis::CoverageRadius => "coverage_radius",
        }
    }

    pub fn parse(s: &str) -> Result<Axis> {
        Axis::ALL
            .into_iter()
            .find(|axis| axis.name() == s)
            .ok_or_else(|| Error::InvalidParameter {
                name: "axis",
                reason: format!(
                    "unknown axis `{s}`; expected one of {}",
                    Axis::ALL.map(Axis::name).join(", ")
                ),
            })
    }

    /// Returns the base scenario with this axis set to `value`, validated.
    pub fn apply(self, base: &Scenario, value: f64) -> Result<Scenario> {
        let mut sc = base.clone();
        match self {
            Axis::SnrDb => sc.snr_db = value,
            Axis::Beta2 => sc.beta2 = value,
            Axis::PathLossExp => sc.path_loss_exp = value,
            Axis::NUsers => sc.n_users = int_value("n_users", value)?,
            Axis::MChannels => sc.m_channels = int_value("m_channels", value)?,
            Axis::CoverageRadius => sc.coverage_radius = value,
        }
        sc.validate()?;
        Ok(sc)
    }

    /// The base scenario's current value on this axis.
    pub fn current(self, sc: &Scenario) -> f64 {
        match self {
            Axis::SnrDb => sc.snr_db,
            Axis::Beta2 => sc.beta2,
            Axis::PathLossExp => sc.path_loss_exp,
            Axis::NUsers => sc.n_users as f64,
            Axis::MChannels => sc.m_channels as f64,
            Axis::CoverageRadius => sc.coverage_radius,
        }
    }
}

fn int_value(name: &'static str, value: f64) -> Result<usize> {
    if value.fract() != 0.0 || value < 0.0 || value > u32::MAX as f64 {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("axis value {value} is not a nonnegative integer"),
        });
    }
    Ok(value as usize)
}

/// Optimizer budget shared by the pairing and power stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tuning {
    /// Candidate solutions per optimizer run.
    pub population_size: usize,
    /// Iteration budget per optimizer run.
    pub max_iterations: usize,
    /// Pairing↔power alternation rounds; 1 means a single pairing pass
    /// followed by a single power pass.
    pub bcd_rounds: usize,
}

impl Default for Tuning {
    fn default() -> Self {
        Tuning {
            population_size: 20,
            max_iterations: 100,
            bcd_rounds: 1,
        }
    }
}

impl Tuning {
    fn zoa_config(&self, dimension: usize, rng_seed: u64) -> ZoaConfig {
        ZoaConfig {
            population_size: self.population_size,
            max_iterations: self.max_iterations,
            ..ZoaConfig::for_unit_box(dimension.max(1), rng_seed)
        }
    }
}

/// A full sweep description.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub axis: Axis,
    pub axis_values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub replications: usize,
    pub base_seed: u64,
    pub tuning: Tuning,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let scenario = Scenario::default();
        ExperimentSpec {
            axis: Axis::SnrDb,
            axis_values: vec![scenario.snr_db],
            schemes: Scheme::ALL.to_vec(),
            replications: 100,
            base_seed: scenario.rng_seed,
            tuning: Tuning::default(),
            scenario,
        }
    }
}

impl ExperimentSpec {
    /// Parses an experiment from config text. Scenario keys are accepted
    /// alongside experiment keys (`axis`, `axis_values`, `schemes`,
    /// `replications`, `base_seed`, `population_size`, `max_iterations`,
    /// `bcd_rounds`); unknown keys are an error.
    pub fn from_config_text(text: &str) -> Result<ExperimentSpec> {
        let mut spec = ExperimentSpec::default();
        let mut axis_values_set = false;
        let mut base_seed_set = false;
        for (line, key, value) in parse_kv(text)? {
            if spec.scenario.apply_kv(&key, &value, line)? {
                continue;
            }
            match key.as_str() {
                "axis" => {
                    spec.axis = Axis::parse(&value).map_err(|e| Error::InvalidConfig {
                        line,
                        reason: e.to_string(),
                    })?;
                }
                "axis_values" => {
                    spec.axis_values = value
                        .split(',')
                        .map(|v| parse_num::<f64>("axis_values", v.trim(), line))
                        .collect::<Result<Vec<f64>>>()?;
                    axis_values_set = true;
                }
                "schemes" => {
                    spec.schemes = value
                        .split(',')
                        .map(|s| {
                            Scheme::parse(s.trim()).map_err(|e| Error::InvalidConfig {
                                line,
                                reason: e.to_string(),
                            })
                        })
                        .collect::<Result<Vec<Scheme>>>()?;
                }
                "replications" => spec.replications = parse_num(&key, &value, line)?,
                "base_seed" => {
                    spec.base_seed = parse_num(&key, &value, line)?;
                    base_seed_set = true;
                }
                "population_size" => spec.tuning.population_size = parse_num(&key, &value, line)?,
                "max_iterations" => spec.tuning.max_iterations = parse_num(&key, &value, line)?,
                "bcd_rounds" => spec.tuning.bcd_rounds = parse_num(&key, &value, line)?,
                _ => {
                    return Err(Error::InvalidConfig {
                        line,
                        reason: format!("unknown key `{key}`"),
                    })
                }
            }
        }
        if !axis_values_set {
            spec.axis_values = vec![spec.axis.current(&spec.scenario)];
        }
        if !base_seed_set {
            spec.base_seed = spec.scenario.rng_seed;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the base scenario, every axis point, and the counts.
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.axis_values.is_empty() {
            return Err(Error::InvalidParameter {
                name: "axis_values",
                reason: "at least one axis value is required".into(),
            });
        }
        for &v in &self.axis_values {
            self.axis.apply(&self.scenario, v)?;
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidParameter {
                name: "schemes",
                reason: "at least one scheme is required".into(),
            });
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter {
                name: "replications",
                reason: "must be ≥ 1".into(),
            });
        }
        if self.tuning.bcd_rounds == 0 {
            return Err(Error::InvalidParameter {
                name: "bcd_rounds",
                reason: "must be ≥ 1".into(),
            });
        }
        Ok(())
    }
}

/// 64-bit finalizer used for seed mixing.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of one sweep point: base ⊕ hash(axis value bits, replication).
pub fn mix_seed(base_seed: u64, axis_value: f64, replication: u64) -> u64 {
    base_seed ^ splitmix64(axis_value.to_bits() ^ splitmix64(replication))
}

/// Derives an independent stream seed for one component of a replication.
fn sub_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag))
}

/// Outcome of one scheme within one replication.
#[derive(Debug, Clone, Copy)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    /// Network EE; 0 when infeasible.
    pub ee: f64,
    /// False when the scheme could not produce a complete feasible solution
    /// on this realization.
    pub feasible: bool,
    pub wall_ms: f64,
}

/// One CSV row of a sweep.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub axis_value: f64,
    pub scheme: Scheme,
    pub replication: usize,
    pub ee: f64,
    pub feasible: bool,
    pub wall_ms: f64,
}

struct ZoupStage {
    result: Result<ZoupResult>,
    /// Milliseconds spent computing the shared pairing stage; charged to the
    /// first scheme that needs it.
    cost_ms: f64,
    charged: bool,
}

/// Runs every scheme on one shared (topology, availability) realization.
/// Scheme-level infeasibility is recorded in the outcome rather than
/// aborting the replication; only realization-level failures (a starved
/// user) abort.
pub fn run_replication(
    scenario: &Scenario,
    schemes: &[Scheme],
    seed: u64,
    tuning: &Tuning,
) -> Result<Vec<SchemeOutcome>> {
    scenario.validate()?;
    let topology = generate_topology(
        scenario,
        &mut ChaCha8Rng::seed_from_u64(sub_seed(seed, 1)),
    );
    let avail = generate_availability(
        scenario,
        &mut ChaCha8Rng::seed_from_u64(sub_seed(seed, 2)),
    )?;

    let bpa_rule = PowerRule::Bpa {
        beta2: scenario.beta2,
    };
    let mut zoup_stage: Option<ZoupStage> = None;
    let mut outcomes = Vec::with_capacity(schemes.len());

    for &scheme in schemes {
        let start = Instant::now();
        let mut extra_ms = 0.0;
        let (ee, feasible) = match scheme {
            Scheme::Oma => (oma_baseline(scenario, &topology, &avail), true),
            Scheme::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 3));
                match random_pairing(&topology, &avail, &mut rng)
                    .and_then(|p| evaluate_pairing(&p, scenario, &topology, &bpa_rule))
                {
                    Ok((_, ee)) => (ee, true),
                    Err(_) => (0.0, false),
                }
            }
            Scheme::Adjacent => benchmark_outcome(
                adjacent_pairing(&topology, &avail),
                scenario,
                &topology,
                &bpa_rule,
            ),
            Scheme::Upwo => benchmark_outcome(
                upwo_pairing(&topology, &avail),
                scenario,
                &topology,
                &bpa_rule,
            ),
            Scheme::Zoup | Scheme::ZoupBpa => {
                let stage = zoup_stage.get_or_insert_with(|| {
                    compute_zoup_stage(scenario, &topology, &avail, &bpa_rule, seed, tuning)
                });
                if !stage.charged {
                    extra_ms = stage.cost_ms;
                    stage.charged = true;
                }
                match &stage.result {
                    Ok(z) => (z.ee, true),
                    Err(_) => (0.0, false),
                }
            }
            Scheme::ZoupFpa => {
                let stage = zoup_stage.get_or_insert_with(|| {
                    compute_zoup_stage(scenario, &topology, &avail, &bpa_rule, seed, tuning)
                });
                if !stage.charged {
                    extra_ms = stage.cost_ms;
                    stage.charged = true;
                }
                match &stage.result {
                    Ok(z) => {
                        match evaluate_pairing(&z.pairing, scenario, &topology, &PowerRule::fpa())
                        {
                            Ok((_, ee)) => (ee, true),
                            Err(_) => (0.0, false),
                        }
                    }
                    Err(_) => (0.0, false),
                }
            }
            Scheme::Zouppa => {
                let stage = zoup_stage.get_or_insert_with(|| {
                    compute_zoup_stage(scenario, &topology, &avail, &bpa_rule, seed, tuning)
                });
                if !stage.charged {
                    extra_ms = stage.cost_ms;
                    stage.charged = true;
                }
                match &stage.result {
                    Ok(z) => {
                        match power_stage(scenario, &topology, &avail, z, seed, tuning) {
                            Ok((_, _, ee)) => (ee, true),
                            Err(_) => (0.0, false),
                        }
                    }
                    Err(_) => (0.0, false),
                }
            }
        };
        outcomes.push(SchemeOutcome {
            scheme,
            ee,
            feasible,
            wall_ms: start.elapsed().as_secs_f64() * 1e3 + extra_ms,
        });
    }
    Ok(outcomes)
}

fn benchmark_outcome(
    pairing: Pairing,
    scenario: &Scenario,
    topology: &Topology,
    rule: &PowerRule,
) -> (f64, bool) {
    match evaluate_pairing(&pairing, scenario, topology, rule) {
        Ok((_, ee)) => (ee, pairing.is_complete()),
        Err(_) => (0.0, false),
    }
}

fn compute_zoup_stage(
    scenario: &Scenario,
    topology: &Topology,
    avail: &AvailabilityMatrix,
    rule: &PowerRule,
    seed: u64,
    tuning: &Tuning,
) -> ZoupStage {
    let start = Instant::now();
    let cfg = tuning.zoa_config(scenario.n_users, sub_seed(seed, 4));
    let result = zoup(scenario, topology, avail, rule, &cfg);
    ZoupStage {
        result,
        cost_ms: start.elapsed().as_secs_f64() * 1e3,
        charged: false,
    }
}

/// Runs the power stage on the pairing stage's output; with `bcd_rounds` > 1
/// the stages alternate, carrying the mean optimized split back into the
/// pairing objective, and the best round wins.
fn power_stage(
    scenario: &Scenario,
    topology: &Topology,
    avail: &AvailabilityMatrix,
    first_stage: &ZoupResult,
    seed: u64,
    tuning: &Tuning,
) -> Result<(Pairing, PowerAllocation, f64)> {
    let n_pairs = first_stage.pairing.pairs.len();
    let cfg = tuning.zoa_config(n_pairs, sub_seed(seed, 5));
    let first_power = zouppa(&first_stage.pairing, scenario, topology, &cfg)?;
    let mut best = (
        first_stage.pairing.clone(),
        first_power.allocation.clone(),
        first_power.ee,
    );

    for round in 2..=tuning.bcd_rounds {
        let mean_dm = best.1.records.iter().map(|r| r.delta_strong).sum::<f64>()
            / best.1.records.len() as f64;
        let rule = PowerRule::Fixed {
            delta_strong: mean_dm,
            delta_weak: 1.0 - mean_dm,
        };
        let pair_cfg =
            tuning.zoa_config(scenario.n_users, sub_seed(seed, 100 + round as u64));
        let Ok(stage) = zoup(scenario, topology, avail, &rule, &pair_cfg) else {
            continue;
        };
        let power_cfg = tuning.zoa_config(
            stage.pairing.pairs.len(),
            sub_seed(seed, 200 + round as u64),
        );
        let Ok(power) = zouppa(&stage.pairing, scenario, topology, &power_cfg) else {
            continue;
        };
        if power.ee > best.2 {
            best = (stage.pairing, power.allocation, power.ee);
        }
    }
    Ok(best)
}

/// Rich single-replication output for inspection commands and tests:
/// the shared realization plus each scheme's pairing/allocation.
pub struct ReplicationDetail {
    pub topology: Topology,
    pub avail: AvailabilityMatrix,
    pub zoup: ZoupResult,
    pub zouppa_pairing: Pairing,
    pub zouppa_allocation: PowerAllocation,
    pub zouppa_ee: f64,
}

/// Runs the optimizing pipeline on one replication and returns all
/// intermediate artifacts (pairing stage, power stage, realization).
pub fn run_pipeline_detail(
    scenario: &Scenario,
    seed: u64,
    tuning: &Tuning,
) -> Result<ReplicationDetail> {
    scenario.validate()?;
    let topology = generate_topology(
        scenario,
        &mut ChaCha8Rng::seed_from_u64(sub_seed(seed, 1)),
    );
    let avail = generate_availability(
        scenario,
        &mut ChaCha8Rng::seed_from_u64(sub_seed(seed, 2)),
    )?;
    let rule = PowerRule::Bpa {
        beta2: scenario.beta2,
    };
    let cfg = tuning.zoa_config(scenario.n_users, sub_seed(seed, 4));
    let zoup_result = zoup(scenario, &topology, &avail, &rule, &cfg)?;
    let (zouppa_pairing, zouppa_allocation, zouppa_ee) =
        power_stage(scenario, &topology, &avail, &zoup_result, seed, tuning)?;
    Ok(ReplicationDetail {
        topology,
        avail,
        zoup: zoup_result,
        zouppa_pairing,
        zouppa_allocation,
        zouppa_ee,
    })
}

/// Runs one replication per seed, in parallel when the `parallel` feature
/// is enabled and sequentially otherwise. Output order follows `seeds`.
pub fn run_batch(
    scenario: &Scenario,
    schemes: &[Scheme],
    seeds: &[u64],
    tuning: &Tuning,
) -> Result<Vec<Vec<SchemeOutcome>>> {
    let indices: Vec<usize> = (0..seeds.len()).collect();
    let job = |i: usize| (i, run_replication(scenario, schemes, seeds[i], tuning));
    let mut batch = map_replications(&indices, job, None)?;
    batch.sort_by_key(|(i, _)| *i);
    batch.into_iter().map(|(_, r)| r).collect()
}

/// Canonical string form of an axis value (used as the resume key).
pub fn format_axis_value(value: f64) -> String {
    format!("{value}")
}

/// Per-(axis value, scheme) aggregate statistics.
#[derive(Debug, Clone)]
pub struct AggregateRow {
    pub axis_value: f64,
    pub scheme: Scheme,
    pub replications: usize,
    pub mean_ee: f64,
    pub std_ee: f64,
}

/// Sweep output summary.
#[derive(Debug)]
pub struct SweepSummary {
    pub results_path: PathBuf,
    pub aggregate_path: PathBuf,
    /// Rows computed in this invocation.
    pub rows_written: usize,
    /// Rows found already complete from an earlier interrupted run.
    pub rows_resumed: usize,
    pub aggregates: Vec<AggregateRow>,
}

const RESULT_HEADER: [&str; 7] = [
    "axis",
    "axis_value",
    "scheme",
    "replication",
    "ee",
    "feasible",
    "wall_ms",
];

/// Runs the full sweep, writing `results.csv` (one row per axis value ×
/// scheme × replication) and `aggregate.csv` (mean and sample standard
/// deviation per axis value × scheme, recomputed from the written rows).
/// Output is flushed after every axis value; a rerun skips completed
/// (axis value, replication) keys.
pub fn run_sweep(
    spec: &ExperimentSpec,
    out_dir: &Path,
    workers: Option<usize>,
) -> Result<SweepSummary> {
    spec.validate()?;
    fs::create_dir_all(out_dir)?;
    let results_path = out_dir.join("results.csv");
    let aggregate_path = out_dir.join("aggregate.csv");

    let completed = load_completed(&results_path, spec)?;
    let rows_resumed = completed.len() * spec.schemes.len();

    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&results_path)?;
    if file.metadata()?.len() == 0 {
        writeln!(file, "{}", RESULT_HEADER.join(","))?;
    }

    let mut rows_written = 0;
    for &value in &spec.axis_values {
        let value_str = format_axis_value(value);
        let pending: Vec<usize> = (0..spec.replications)
            .filter(|rep| !completed.contains(&(value_str.clone(), *rep)))
            .collect();
        if pending.is_empty() {
            continue;
        }
        let scenario = spec.axis.apply(&spec.scenario, value)?;
        let schemes = spec.schemes.clone();
        let tuning = spec.tuning;
        let job = |rep: usize| {
            let seed = mix_seed(spec.base_seed, value, rep as u64);
            (rep, run_replication(&scenario, &schemes, seed, &tuning))
        };
        let mut batch = map_replications(&pending, job, workers)?;
        batch.sort_by_key(|(rep, _)| *rep);
        for (rep, outcome) in batch {
            let outcomes = outcome?;
            for o in outcomes {
                writeln!(
                    file,
                    "{},{},{},{},{},{},{:.3}",
                    spec.axis.name(),
                    value_str,
                    o.scheme,
                    rep,
                    fmt_sig(o.ee, 6),
                    o.feasible,
                    o.wall_ms
                )?;
                rows_written += 1;
            }
        }
        file.flush()?;
    }
    drop(file);

    let aggregates = aggregate_results(&results_path, spec)?;
    write_aggregates(&aggregate_path, spec, &aggregates)?;

    Ok(SweepSummary {
        results_path,
        aggregate_path,
        rows_written,
        rows_resumed,
        aggregates,
    })
}

#[cfg(feature = "parallel")]
fn map_replications<F>(
    pending: &[usize],
    job: F,
    workers: Option<usize>,
) -> Result<Vec<(usize, Result<Vec<SchemeOutcome>>)>>
where
    F: Fn(usize) -> (usize, Result<Vec<SchemeOutcome>>) + Sync,
{
    match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter {
                    name: "workers",
                    reason: e.to_string(),
                })?;
            Ok(pool.install(|| pending.par_iter().map(|&rep| job(rep)).collect()))
        }
        None => Ok(pending.par_iter().map(|&rep| job(rep)).collect()),
    }
}

#[cfg(not(feature = "parallel"))]
fn map_replications<F>(
    pending: &[usize],
    job: F,
    _workers: Option<usize>,
) -> Result<Vec<(usize, Result<Vec<SchemeOutcome>>)>>
where
    F: Fn(usize) -> (usize, Result<Vec<SchemeOutcome>>) + Sync,
{
    Ok(pending.iter().map(|&rep| job(rep)).collect())
}

/// Reads an existing results file and returns the set of complete
/// (axis value, replication) keys. Rows belonging to incomplete keys (an
/// interrupted append) are compacted away so the rerun regenerates them.
fn load_completed(
    results_path: &Path,
    spec: &ExperimentSpec,
) -> Result<std::collections::HashSet<(String, usize)>> {
    let mut complete = std::collections::HashSet::new();
    if !results_path.exists() {
        return Ok(complete);
    }
    let mut reader = csv::Reader::from_path(results_path)?;
    let mut rows: Vec<csv::StringRecord> = Vec::new();
    let mut counts: HashMap<(String, usize), usize> = HashMap::new();
    for record in reader.records() {
        let record = record?;
        let axis_value = record.get(1).unwrap_or_default().to_string();
        let rep: usize = record.get(3).unwrap_or_default().parse().unwrap_or(usize::MAX);
        *counts.entry((axis_value, rep)).or_default() += 1;
        rows.push(record);
    }
    for (key, &count) in &counts {
        if count == spec.schemes.len() {
            complete.insert(key.clone());
        }
    }
    if complete.len() != counts.len() {
        // Partial keys present: rewrite the file with complete rows only.
        let mut writer = csv::Writer::from_path(results_path)?;
        writer.write_record(RESULT_HEADER)?;
        for record in &rows {
            let key = (
                record.get(1).unwrap_or_default().to_string(),
                record
                    .get(3)
                    .unwrap_or_default()
                    .parse()
                    .unwrap_or(usize::MAX),
            );
            if complete.contains(&key) {
                writer.write_record(record)?;
            }
        }
        writer.flush()?;
    }
    Ok(complete)
}

/// Recomputes aggregates from the written rows (so the file, not in-memory
/// state, is the source of truth).
fn aggregate_results(results_path: &Path, spec: &ExperimentSpec) -> Result<Vec<AggregateRow>> {
    let mut reader = csv::Reader::from_path(results_path)?;
    let mut groups: HashMap<(String, String), Vec<f64>> = HashMap::new();
    for record in reader.records() {
        let record = record?;
        let axis_value = record.get(1).unwrap_or_default().to_string();
        let scheme = record.get(2).unwrap_or_default().to_string();
        let ee: f64 = record.get(4).unwrap_or_default().parse().unwrap_or(f64::NAN);
        groups.entry((axis_value, scheme)).or_default().push(ee);
    }
    let mut aggregates = Vec::new();
    for &value in &spec.axis_values {
        let value_str = format_axis_value(value);
        for &scheme in &spec.schemes {
            let Some(ees) = groups.get(&(value_str.clone(), scheme.name().to_string())) else {
                continue;
            };
            let n = ees.len();
            let mean = ees.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (ees.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            aggregates.push(AggregateRow {
                axis_value: value,
                scheme,
                replications: n,
                mean_ee: mean,
                std_ee: std,
            });
        }
    }
    Ok(aggregates)
}

fn write_aggregates(
    path: &Path,
    spec: &ExperimentSpec,
    aggregates: &[AggregateRow],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["axis", "axis_value", "scheme", "replications", "mean_ee", "std_ee"])?;
    for a in aggregates {
        w.write_record([
            spec.axis.name().to_string(),
            format_axis_value(a.axis_value),
            a.scheme.name().to_string(),
            a.replications.to_string(),
            fmt_sig(a.mean_ee, 6),
            fmt_sig(a.std_ee, 6),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One instance of the oracle-vs-heuristic gap study.
#[derive(Debug, Clone, Copy)]
pub struct GapRow {
    pub instance: usize,
    pub oracle_ee: f64,
    pub zoup_ee: f64,
    /// (oracle − heuristic)/oracle; 0 for a zero-EE oracle.
    pub gap: f64,
    /// False when the instance admits no complete pairing at all.
    pub feasible: bool,
}

/// Compares the pairing search against the exhaustive oracle on seeded
/// small instances drawn from `scenario` (which must respect the oracle's
/// enumeration bounds).
pub fn oracle_gap_study(
    scenario: &Scenario,
    instances: usize,
    tuning: &Tuning,
) -> Result<Vec<GapRow>> {
    scenario.validate()?;
    let rule = PowerRule::Bpa {
        beta2: scenario.beta2,
    };
    let mut rows = Vec::with_capacity(instances);
    for instance in 0..instances {
        let seed = mix_seed(scenario.rng_seed, 0.0, instance as u64);
        let topology = generate_topology(
            scenario,
            &mut ChaCha8Rng::seed_from_u64(sub_seed(seed, 1)),
        );
        let avail = generate_availability(
            scenario,
            &mut ChaCha8Rng::seed_from_u64(sub_seed(seed, 2)),
        )?;
        let oracle = crate::oracle::exhaustive_pairing(scenario, &topology, &avail, &rule);
        match oracle {
            Ok(oracle) => {
                let cfg = tuning.zoa_config(scenario.n_users, sub_seed(seed, 4));
                let heuristic = zoup(scenario, &topology, &avail, &rule, &cfg)?;
                let gap = if oracle.best_ee > 0.0 {
                    (oracle.best_ee - heuristic.ee) / oracle.best_ee
                } else {
                    0.0
                };
                rows.push(GapRow {
                    instance,
                    oracle_ee: oracle.best_ee,
                    zoup_ee: heuristic.ee,
                    gap,
                    feasible: true,
                });
            }
            Err(Error::Infeasible { .. }) => {
                rows.push(GapRow {
                    instance,
                    oracle_ee: 0.0,
                    zoup_ee: 0.0,
                    gap: 0.0,
                    feasible: false,
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

/// Convergence trace of the pairing search on one seeded realization.
pub fn convergence_trace(scenario: &Scenario, seed: u64, tuning: &Tuning) -> Result<Vec<f64>> {
    scenario.validate()?;
    let topology = generate_topology(
        scenario,
        &mut ChaCha8Rng::seed_from_u64(sub_seed(seed, 1)),
    );
    let avail = generate_availability(
        scenario,
        &mut ChaCha8Rng::seed_from_u64(sub_seed(seed, 2)),
    )?;
    let rule = PowerRule::Bpa {
        beta2: scenario.beta2,
    };
    let cfg = tuning.zoa_config(scenario.n_users, sub_seed(seed, 4));
    Ok(zoup(scenario, &topology, &avail, &rule, &cfg)?.trace)
}
