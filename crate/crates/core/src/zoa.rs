//! Zebra optimization: a population metaheuristic over a real-valued box.
//!
//! Each iteration applies two phases to every candidate ("zebra"). The
//! foraging phase moves candidates toward the population's best member (the
//! pioneer). The defense phase either perturbs a candidate in place with a
//! decaying step (mode S1, fleeing) or moves it toward the attacked zebra
//! (mode S2, herding), chosen by a fair coin per candidate. After each phase
//! a move is kept only if it strictly improves fitness, so the best-fitness
//! trace is nondecreasing by construction. Optimization stops early once the
//! per-iteration improvement stays within `epsilon` for two consecutive
//! iterations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// How the integer coefficient ω of the movement equations is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OmegaRule {
    /// ω drawn uniformly from {1, 2} per coordinate (default).
    #[default]
    Random12,
    /// ω fixed at 1.
    Fixed1,
    /// ω fixed at 2.
    Fixed2,
}

impl OmegaRule {
    fn sample(self, rng: &mut impl Rng) -> f64 {
        match self {
            OmegaRule::Random12 => rng.gen_range(1..=2) as f64,
            OmegaRule::Fixed1 => 1.0,
            OmegaRule::Fixed2 => 2.0,
        }
    }
}

/// Which candidate plays the "attacked zebra" AZ in defense mode S2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AzRule {
    /// The current global-best candidate (default).
    #[default]
    GlobalBest,
    /// A uniformly drawn population member.
    RandomMember,
}

/// Optimizer configuration.
#[derive(Debug, Clone)]
pub struct ZoaConfig {
    /// Number of candidate solutions (≥ 2).
    pub population_size: usize,
    /// Iteration budget T_max (≥ 1).
    pub max_iterations: usize,
    /// Search-space dimension (≥ 1).
    pub dimension: usize,
    /// Per-dimension (lower, upper) bounds with lower < upper.
    pub bounds: Vec<(f64, f64)>,
    /// Scale constant of the S1 defense perturbation (> 0).
    pub defense_r: f64,
    /// Convergence tolerance for the early stop (> 0).
    pub epsilon: f64,
    /// Seed of the optimizer's RNG stream.
    pub rng_seed: u64,
    /// ω selection rule.
    pub omega_rule: OmegaRule,
    /// AZ selection rule.
    pub az_rule: AzRule,
}

impl ZoaConfig {
    /// Defaults (population 20, 100 iterations, ℝ = 0.1) over a given box.
    pub fn for_box(bounds: Vec<(f64, f64)>, rng_seed: u64) -> ZoaConfig {
        ZoaConfig {
            population_size: 20,
            max_iterations: 100,
            dimension: bounds.len(),
            bounds,
            defense_r: 0.1,
            epsilon: 1e-9,
            rng_seed,
            omega_rule: OmegaRule::default(),
            az_rule: AzRule::default(),
        }
    }

    /// Defaults over the unit box [0, 1]^dimension.
    pub fn for_unit_box(dimension: usize, rng_seed: u64) -> ZoaConfig {
        ZoaConfig::for_box(vec![(0.0, 1.0); dimension], rng_seed)
    }

    /// Checks every invariant, naming the offending parameter on failure.
    pub fn validate(&self) -> Result<()> {
        fn bad(name: &'static str, reason: String) -> Error {
            Error::InvalidParameter { name, reason }
        }
        if self.population_size < 2 {
            return Err(bad(
                "population_size",
                format!("must be ≥ 2, got {}", self.population_size),
            ));
        }
        if self.max_iterations < 1 {
            return Err(bad("max_iterations", "must be ≥ 1, got 0".into()));
        }
        if self.dimension < 1 {
            return Err(bad("dimension", "must be ≥ 1, got 0".into()));
        }
        if self.bounds.len() != self.dimension {
            return Err(bad(
                "bounds",
                format!(
                    "need one (lower, upper) pair per dimension: {} pairs for dimension {}",
                    self.bounds.len(),
                    self.dimension
                ),
            ));
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(bad(
                    "bounds",
                    format!("dimension {i}: need finite lower < upper, got ({lo}, {hi})"),
                ));
            }
        }
        if !(self.defense_r > 0.0 && self.defense_r.is_finite()) {
            return Err(bad(
                "defense_r",
                format!("must be positive, got {}", self.defense_r),
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(bad(
                "epsilon",
                format!("must be positive, got {}", self.epsilon),
            ));
        }
        Ok(())
    }

    fn clamp(&self, position: &mut [f64]) {
        for (x, &(lo, hi)) in position.iter_mut().zip(&self.bounds) {
            *x = x.clamp(lo, hi);
        }
    }
}

/// One candidate solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Coordinates, always inside the configured box after any update.
    pub position: Vec<f64>,
    /// Objective value; higher is better. NaN objective values are treated
    /// as −∞ so they can never be accepted.
    pub fitness: f64,
}

/// Output of one optimization run.
#[derive(Debug, Clone)]
pub struct ZoaResult {
    /// Best candidate ever observed (greedy acceptance keeps it in the
    /// population, so this equals the final population's best member).
    pub best: Candidate,
    /// Best fitness after initialization and after each iteration.
    pub trace: Vec<f64>,
    /// Iterations actually executed (≤ max_iterations under the early stop).
    pub iterations: usize,
    /// Fitness of each injected seed candidate, in injection order.
    pub seed_fitness: Vec<f64>,
}

/// Foraging move for one coordinate: toward the pioneer.
#[inline]
pub fn forage_step(x: f64, best: f64, r: f64, omega: f64) -> f64 {
    x + r * (best - omega * x)
}

/// Defense mode S1 for one coordinate: decaying in-place perturbation.
#[inline]
pub fn defense_s1_step(x: f64, r: f64, defense_r: f64, iter: usize, max_iterations: usize) -> f64 {
    let decay = 1.0 - iter as f64 / max_iterations as f64;
    x + defense_r * (2.0 * r - 1.0) * decay * x
}

/// Defense mode S2 for one coordinate: toward the attacked zebra.
#[inline]
pub fn defense_s2_step(x: f64, az: f64, r: f64, omega: f64) -> f64 {
    x + r * (az - omega * x)
}

/// Applies the foraging move to every coordinate and clamps to the box.
/// The returned candidate's fitness is not yet evaluated (NaN).
pub fn forage_update(
    candidate: &Candidate,
    best: &Candidate,
    config: &ZoaConfig,
    rng: &mut impl Rng,
) -> Candidate {
    let mut position: Vec<f64> = candidate
        .position
        .iter()
        .zip(&best.position)
        .map(|(&x, &b)| {
            let r = rng.gen::<f64>();
            let omega = config.omega_rule.sample(rng);
            forage_step(x, b, r, omega)
        })
        .collect();
    config.clamp(&mut position);
    Candidate {
        position,
        fitness: f64::NAN,
    }
}

/// Applies the defense move (S1 or S2 chosen by a fair coin) to every
/// coordinate and clamps to the box. Fitness is not yet evaluated (NaN).
pub fn defense_update(
    candidate: &Candidate,
    best: &Candidate,
    iter: usize,
    config: &ZoaConfig,
    rng: &mut impl Rng,
) -> Candidate {
    let guard = rng.gen::<f64>();
    let mut position: Vec<f64> = if guard <= 0.5 {
        candidate
            .position
            .iter()
            .map(|&x| {
                let r = rng.gen::<f64>();
                defense_s1_step(x, r, config.defense_r, iter, config.max_iterations)
            })
            .collect()
    } else {
        candidate
            .position
            .iter()
            .zip(&best.position)
            .map(|(&x, &az)| {
                let r = rng.gen::<f64>();
                let omega = config.omega_rule.sample(rng);
                defense_s2_step(x, az, r, omega)
            })
            .collect()
    };
    config.clamp(&mut position);
    Candidate {
        position,
        fitness: f64::NAN,
    }
}

fn sanitize(f: f64) -> f64 {
    if f.is_nan() {
        f64::NEG_INFINITY
    } else {
        f
    }
}

fn best_index(pop: &[Candidate]) -> usize {
    let mut idx = 0;
    for (i, c) in pop.iter().enumerate().skip(1) {
        if c.fitness > pop[idx].fitness {
            idx = i;
        }
    }
    idx
}

/// Runs the optimizer from a random initial population.
pub fn optimize<F>(objective: F, config: &ZoaConfig) -> Result<ZoaResult>
where
    F: Fn(&[f64]) -> f64,
{
    optimize_seeded(objective, config, &[])
}

/// Runs the optimizer with `seeds` injected as the first population members
/// (clamped to the box). Greedy acceptance guarantees the result's fitness is
/// at least every seed's fitness. Seeds beyond the population size are
/// ignored.
pub fn optimize_seeded<F>(objective: F, config: &ZoaConfig, seeds: &[Vec<f64>]) -> Result<ZoaResult>
where
    F: Fn(&[f64]) -> f64,
{
    config.validate()?;
    for (i, s) in seeds.iter().enumerate() {
        if s.len() != config.dimension {
            return Err(Error::InvalidParameter {
                name: "seeds",
                reason: format!(
                    "seed {i} has length {}, expected dimension {}",
                    s.len(),
                    config.dimension
                ),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);

    let mut population: Vec<Candidate> = Vec::with_capacity(config.population_size);
    for seed in seeds.iter().take(config.population_size) {
        let mut position = seed.clone();
        config.clamp(&mut position);
        let fitness = sanitize(objective(&position));
        population.push(Candidate { position, fitness });
    }
    let seed_fitness: Vec<f64> = population.iter().map(|c| c.fitness).collect();
    while population.len() < config.population_size {
        let position: Vec<f64> = config
            .bounds
            .iter()
            .map(|&(lo, hi)| lo + rng.gen::<f64>() * (hi - lo))
            .collect();
        let fitness = sanitize(objective(&position));
        population.push(Candidate { position, fitness });
    }

    let mut best = population[best_index(&population)].clone();
    let mut trace = vec![best.fitness];
    let mut iterations = 0;
    let mut stall = 0;

    for t in 1..=config.max_iterations {
        iterations = t;
        let before = best.fitness;

        // Foraging phase: propose with the phase-start pioneer, then accept
        // in candidate order. RNG draws all happen up front so the stream is
        // independent of evaluation order.
        let proposals: Vec<Candidate> = population
            .iter()
            .map(|c| forage_update(c, &best, config, &mut rng))
            .collect();
        accept_improvements(&objective, &mut population, proposals);
        best = population[best_index(&population)].clone();

        // Defense phase against the post-forage pioneer.
        let proposals: Vec<Candidate> = population
            .iter()
            .map(|c| {
                let az_owner = match config.az_rule {
                    AzRule::GlobalBest => None,
                    AzRule::RandomMember => Some(rng.gen_range(0..config.population_size)),
                };
                let az = match az_owner {
                    None => best.clone(),
                    Some(i) => population[i].clone(),
                };
                defense_update(c, &az, t, config, &mut rng)
            })
            .collect();
        accept_improvements(&objective, &mut population, proposals);
        best = population[best_index(&population)].clone();

        trace.push(best.fitness);
        let improvement = best.fitness - before;
        if improvement <= config.epsilon {
            stall += 1;
        } else {
            stall = 0;
        }
        if stall >= 2 {
            break;
        }
    }

    Ok(ZoaResult {
        best,
        trace,
        iterations,
        seed_fitness,
    })
}

/// Evaluates each proposal and keeps it only when strictly better than the
/// incumbent, applied in candidate-index order.
fn accept_improvements<F>(objective: &F, population: &mut [Candidate], proposals: Vec<Candidate>)
where
    F: Fn(&[f64]) -> f64,
{
    for (incumbent, mut proposal) in population.iter_mut().zip(proposals) {
        proposal.fitness = sanitize(objective(&proposal.position));
        if proposal.fitness > incumbent.fitness {
            *incumbent = proposal;
        }
    }
}
