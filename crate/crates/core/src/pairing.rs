//! User pairing, channel assignment, and the pairing-stage optimizer.
//!
//! A pairing groups the N users into N/2 clusters of two (strong member by
//! channel gain, weak member) and assigns each cluster a distinct channel
//! that is available to both members. The metaheuristic searches pairings
//! through a random-key encoding: a point in [0,1]^N is decoded by sorting
//! users by key and pairing consecutive users, with channels chosen by
//! maximum bipartite matching so that a decode fails only when the instance
//! itself admits no complete assignment. Benchmark schemes (random pairing,
//! adjacent-gain pairing, strong-half/weak-half pairing, and the one-user-
//! per-channel OMA baseline) share the same channel-matching path.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::availability::AvailabilityMatrix;
use crate::error::{Error, Result};
use crate::matching::max_bipartite;
use crate::power::{PowerAllocation, PowerRule};
use crate::rates::{eval_pair, network_ee, oma_rate, pair_qos_decodable, PairEval};
use crate::scenario::Scenario;
use crate::topology::Topology;
use crate::zoa::{self, ZoaConfig};

/// Retry budget for random pairing draws whose channel matching fails.
pub const RANDOM_PAIRING_RETRIES: usize = 50;
/// Penalty charged per unpaired user / violating pair in the search fitness.
const PENALTY: f64 = 1e6;
/// Slack for total-power checks.
const C3_TOL: f64 = 1e-9;
/// Slack for per-pair split checks.
const C2_TOL: f64 = 1e-12;

/// A set of user pairs with their channel assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing {
    /// (strong, weak) user indices per cluster; gain(strong) ≥ gain(weak).
    pub pairs: Vec<(usize, usize)>,
    /// Channel of each cluster, aligned with `pairs`; channels are distinct.
    pub channel_of_pair: Vec<usize>,
    /// Users left out when no complete channel matching exists (ascending).
    pub unpaired: Vec<usize>,
}

impl Pairing {
    /// True when every user is served (no cluster was dissolved).
    pub fn is_complete(&self) -> bool {
        self.unpaired.is_empty()
    }
}

/// Sorts user indices by key ascending, ties broken by user index.
fn argsort(keys: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    order
}

/// Pairs consecutive users of `order`, assigns roles by gain, and chooses
/// channels by maximum matching. Tentative pairs that cannot get a channel
/// are dissolved into `unpaired`.
fn order_to_pairing(order: &[usize], topology: &Topology, avail: &AvailabilityMatrix) -> Pairing {
    let n_pairs = order.len() / 2;
    let mut tentative = Vec::with_capacity(n_pairs);
    let mut adjacency = Vec::with_capacity(n_pairs);
    let mut row = Vec::new();
    for k in 0..n_pairs {
        let (a, b) = (order[2 * k], order[2 * k + 1]);
        let (strong, weak) = assign_roles(a, b, topology);
        avail.intersect_rows_into(strong, weak, &mut row);
        tentative.push((strong, weak));
        adjacency.push(row.clone());
    }
    let matching = max_bipartite(&adjacency, avail.m_channels());

    let mut pairs = Vec::with_capacity(n_pairs);
    let mut channel_of_pair = Vec::with_capacity(n_pairs);
    let mut unpaired = Vec::new();
    for (k, &(s, w)) in tentative.iter().enumerate() {
        match matching[k] {
            Some(c) => {
                pairs.push((s, w));
                channel_of_pair.push(c);
            }
            None => {
                unpaired.push(s);
                unpaired.push(w);
            }
        }
    }
    unpaired.sort_unstable();
    Pairing {
        pairs,
        channel_of_pair,
        unpaired,
    }
}

/// Strong role goes to the higher gain; ties to the lower user index.
fn assign_roles(a: usize, b: usize, topology: &Topology) -> (usize, usize) {
    let (ga, gb) = (topology.gains[a], topology.gains[b]);
    if ga > gb || (ga == gb && a < b) {
        (a, b)
    } else {
        (b, a)
    }
}

/// Decodes a random-key vector into a pairing. Deterministic in
/// (keys, topology, availability); infeasibility shows up as `unpaired`.
pub fn decode_pairing(
    keys: &[f64],
    topology: &Topology,
    avail: &AvailabilityMatrix,
) -> Pairing {
    order_to_pairing(&argsort(keys), topology, avail)
}

/// Encodes a user order as a key vector that decodes back to it:
/// keys[user] = (slot + ½)/N.
pub fn encode_order(order: &[usize]) -> Vec<f64> {
    let n = order.len();
    let mut keys = vec![0.0; n];
    for (slot, &user) in order.iter().enumerate() {
        keys[user] = (slot as f64 + 0.5) / n as f64;
    }
    keys
}

/// Users sorted by gain descending (ties by index).
fn gain_order_desc(topology: &Topology) -> Vec<usize> {
    let mut order: Vec<usize> = (0..topology.n_users()).collect();
    order.sort_by(|&a, &b| {
        topology.gains[b]
            .total_cmp(&topology.gains[a])
            .then(a.cmp(&b))
    });
    order
}

/// Pairs users with adjacent channel gains: 1st with 2nd, 3rd with 4th, …
pub fn adjacent_pairing(topology: &Topology, avail: &AvailabilityMatrix) -> Pairing {
    order_to_pairing(&gain_order_desc(topology), topology, avail)
}

/// The adjacent-gain user order (exposed for seeding the pairing search).
pub fn adjacent_order(topology: &Topology) -> Vec<usize> {
    gain_order_desc(topology)
}

/// Strong-half/weak-half pairing: users are sorted by gain and split into a
/// strong half and a weak half; the k-th strongest is paired with the k-th
/// member of the weak half.
pub fn upwo_pairing(topology: &Topology, avail: &AvailabilityMatrix) -> Pairing {
    order_to_pairing(&upwo_order(topology), topology, avail)
}

/// The strong-half/weak-half user order (exposed for seeding).
pub fn upwo_order(topology: &Topology) -> Vec<usize> {
    let sorted = gain_order_desc(topology);
    let half = sorted.len() / 2;
    let mut order = Vec::with_capacity(sorted.len());
    for k in 0..half {
        order.push(sorted[k]);
        order.push(sorted[half + k]);
    }
    order
}

/// Uniformly random pairing; the permutation is redrawn (up to
/// [`RANDOM_PAIRING_RETRIES`] times) when channel matching fails.
pub fn random_pairing(
    topology: &Topology,
    avail: &AvailabilityMatrix,
    rng: &mut impl Rng,
) -> Result<Pairing> {
    let mut order: Vec<usize> = (0..topology.n_users()).collect();
    for _ in 0..RANDOM_PAIRING_RETRIES {
        order.shuffle(rng);
        let pairing = order_to_pairing(&order, topology, avail);
        if pairing.is_complete() {
            return Ok(pairing);
        }
    }
    Err(Error::Infeasible {
        scheme: "random_pairing",
        detail: format!(
            "no complete channel matching in {RANDOM_PAIRING_RETRIES} random draws"
        ),
    })
}

/// Evaluates a pairing under a power rule: per-pair rates/EE and the network
/// EE (with budget checks). Unpaired users contribute nothing.
pub fn evaluate_pairing(
    pairing: &Pairing,
    scenario: &Scenario,
    topology: &Topology,
    rule: &PowerRule,
) -> Result<(Vec<PairEval>, f64)> {
    let snr = scenario.snr_linear();
    let p = scenario.cluster_power;
    let mut evals = Vec::with_capacity(pairing.pairs.len());
    for &(s, w) in &pairing.pairs {
        let (gs, gw) = (topology.gains[s], topology.gains[w]);
        let (dm, dv) = rule.deltas_for(snr, gs, gw)?;
        evals.push(eval_pair(snr, gs, gw, dm, dv, p));
    }
    let ee = network_ee(&evals, scenario.effective_total_power())?;
    Ok((evals, ee))
}

/// Output of the pairing-stage search.
#[derive(Debug, Clone)]
pub struct ZoupResult {
    pub pairing: Pairing,
    /// Network EE of the returned pairing under the search's power rule.
    pub ee: f64,
    /// Fitness of the injected strong-half/weak-half and adjacent-gain seeds
    /// (equal to their network EE when their channel matching is complete).
    pub seed_ee: Vec<f64>,
    /// Best-fitness trace of the underlying optimizer run.
    pub trace: Vec<f64>,
    pub iterations: usize,
}

/// Searches pairings by zebra optimization over random-key vectors.
///
/// The fitness of a key vector is the network EE of its decoded pairing
/// under `power_rule`, minus a large penalty per unpaired user, per
/// QoS-violating pair, and for a broken total-power budget. The
/// strong-half/weak-half and adjacent-gain orders are injected into the
/// initial population, so the result never falls below either benchmark.
/// The optimizer's dimension and bounds are set to [0,1]^N internally.
pub fn zoup(
    scenario: &Scenario,
    topology: &Topology,
    avail: &AvailabilityMatrix,
    power_rule: &PowerRule,
    zoa_config: &ZoaConfig,
) -> Result<ZoupResult> {
    let n = topology.n_users();
    let snr = scenario.snr_linear();
    let p = scenario.cluster_power;
    let total = scenario.effective_total_power();
    let config = ZoaConfig {
        dimension: n,
        bounds: vec![(0.0, 1.0); n],
        ..zoa_config.clone()
    };

    let fitness_of = |pairing: &Pairing| -> f64 {
        let mut fitness = 0.0;
        for &(s, w) in &pairing.pairs {
            let (gs, gw) = (topology.gains[s], topology.gains[w]);
            let Ok((dm, dv)) = power_rule.deltas_for(snr, gs, gw) else {
                return f64::NEG_INFINITY;
            };
            let ev = eval_pair(snr, gs, gw, dm, dv, p);
            fitness += ev.pair_ee;
            if !pair_qos_decodable(snr, gs, gw, dm, dv) {
                fitness -= PENALTY;
            }
        }
        fitness -= PENALTY * pairing.unpaired.len() as f64;
        if pairing.pairs.len() as f64 * p > total + C3_TOL {
            fitness -= PENALTY;
        }
        fitness
    };

    let seeds = vec![
        encode_order(&upwo_order(topology)),
        encode_order(&adjacent_order(topology)),
    ];
    let objective = |keys: &[f64]| fitness_of(&decode_pairing(keys, topology, avail));
    let result = zoa::optimize_seeded(objective, &config, &seeds)?;

    if result.best.fitness <= -PENALTY / 2.0 {
        return Err(Error::Infeasible {
            scheme: "zoup",
            detail: "no penalty-free pairing in the final population".into(),
        });
    }
    let pairing = decode_pairing(&result.best.position, topology, avail);
    let (_, ee) = evaluate_pairing(&pairing, scenario, topology, power_rule)?;
    Ok(ZoupResult {
        pairing,
        ee,
        seed_ee: result.seed_fitness,
        trace: result.trace,
        iterations: result.iterations,
    })
}

/// One-user-per-channel assignment by maximum matching on the availability
/// matrix. Returns the channel of each user, `None` for unserved users.
pub fn oma_assignment(topology: &Topology, avail: &AvailabilityMatrix) -> Vec<Option<usize>> {
    let adjacency: Vec<Vec<u64>> = (0..topology.n_users())
        .map(|u| avail.row(u).to_vec())
        .collect();
    max_bipartite(&adjacency, avail.m_channels())
}

/// Orthogonal baseline: each served user transmits alone on its channel at
/// cluster power with the ½ pre-log rate. EE is normalized by the whole
/// population's power budget — every user holds a transmitter whether or not
/// a channel is free for it — so scarce channels drag the baseline down
/// rather than leaving it flat.
pub fn oma_baseline(
    scenario: &Scenario,
    topology: &Topology,
    avail: &AvailabilityMatrix,
) -> f64 {
    let snr = scenario.snr_linear();
    let sum_rate: f64 = oma_assignment(topology, avail)
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_some())
        .map(|(u, _)| oma_rate(snr, topology.gains[u]))
        .sum();
    sum_rate / (scenario.n_users as f64 * scenario.cluster_power)
}

/// Validates a pairing (and optionally its power allocation) against every
/// constraint, naming the first violated one:
/// C1 per-user QoS, C2 per-pair budget, C3 total budget, C4 exactly two
/// users per cluster with each user in at most one cluster, C5 shared
/// channel availability — plus channel injectivity and gain-ordered roles.
pub fn validate_pairing(
    pairing: &Pairing,
    scenario: &Scenario,
    topology: &Topology,
    avail: &AvailabilityMatrix,
    allocation: Option<&PowerAllocation>,
) -> Result<()> {
    let n = topology.n_users();
    if pairing.channel_of_pair.len() != pairing.pairs.len() {
        return Err(Error::ConstraintViolated {
            constraint: "C5",
            pair: pairing.channel_of_pair.len().min(pairing.pairs.len()),
            detail: "pairs and channel assignment have different lengths".into(),
        });
    }
    // C4: each user appears exactly once across pairs and unpaired.
    let mut seen = vec![0usize; n];
    for &(s, w) in &pairing.pairs {
        seen[s] += 1;
        seen[w] += 1;
    }
    for &u in &pairing.unpaired {
        seen[u] += 1;
    }
    for (u, &count) in seen.iter().enumerate() {
        if count != 1 {
            return Err(Error::ConstraintViolated {
                constraint: "C4",
                pair: 0,
                detail: format!("user {u} appears {count} times across clusters"),
            });
        }
    }
    let mut channel_used = vec![false; avail.m_channels()];
    for (j, (&(s, w), &c)) in pairing
        .pairs
        .iter()
        .zip(&pairing.channel_of_pair)
        .enumerate()
    {
        if channel_used[c] {
            return Err(Error::ConstraintViolated {
                constraint: "C5",
                pair: j,
                detail: format!("channel {c} assigned to more than one cluster"),
            });
        }
        channel_used[c] = true;
        if !avail.available(s, c) || !avail.available(w, c) {
            return Err(Error::ConstraintViolated {
                constraint: "C5",
                pair: j,
                detail: format!("channel {c} not available to both users ({s}, {w})"),
            });
        }
        let (gs, gw) = (topology.gains[s], topology.gains[w]);
        if gs < gw || (gs == gw && s > w) {
            return Err(Error::ConstraintViolated {
                constraint: "C4",
                pair: j,
                detail: format!("roles not gain-ordered: gain({s}) < gain({w})"),
            });
        }
    }
    if let Some(alloc) = allocation {
        if alloc.records.len() != pairing.pairs.len() {
            return Err(Error::ConstraintViolated {
                constraint: "C2",
                pair: alloc.records.len().min(pairing.pairs.len()),
                detail: "allocation and pairing have different pair counts".into(),
            });
        }
        let snr = scenario.snr_linear();
        let mut sum_power = 0.0;
        for (j, (rec, &(s, w))) in alloc.records.iter().zip(&pairing.pairs).enumerate() {
            for d in [rec.delta_strong, rec.delta_weak] {
                if !(0.0..=1.0).contains(&d) {
                    return Err(Error::ConstraintViolated {
                        constraint: "C2",
                        pair: j,
                        detail: format!("power fraction {d} outside [0, 1]"),
                    });
                }
            }
            let used = rec.pair_power * (rec.delta_strong + rec.delta_weak);
            if used > rec.pair_power + C2_TOL {
                return Err(Error::ConstraintViolated {
                    constraint: "C2",
                    pair: j,
                    detail: format!("split uses {used} W of {} W", rec.pair_power),
                });
            }
            if rec.pair_power <= 0.0 || rec.pair_power > scenario.cluster_power + C2_TOL {
                return Err(Error::ConstraintViolated {
                    constraint: "C2",
                    pair: j,
                    detail: format!(
                        "cluster power {} W outside (0, {}]",
                        rec.pair_power, scenario.cluster_power
                    ),
                });
            }
            sum_power += rec.pair_power;
            if !pair_qos_decodable(
                snr,
                topology.gains[s],
                topology.gains[w],
                rec.delta_strong,
                rec.delta_weak,
            ) {
                return Err(Error::ConstraintViolated {
                    constraint: "C1",
                    pair: j,
                    detail: format!("pair ({s}, {w}) fails the per-user QoS check"),
                });
            }
        }
        if sum_power > scenario.effective_total_power() + C3_TOL {
            return Err(Error::ConstraintViolated {
                constraint: "C3",
                pair: alloc.records.len().saturating_sub(1),
                detail: format!(
                    "Σ P_j = {sum_power} W exceeds {} W",
                    scenario.effective_total_power()
                ),
            });
        }
    }
    Ok(())
}
