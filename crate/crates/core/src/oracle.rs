//! Brute-force references for small instances.
//!
//! `exhaustive_pairing` enumerates every perfect matching of users and every
//! injective channel assignment, so it is a true optimum against which the
//! metaheuristic can be checked. `grid_delta_search` scans the power split
//! of a single pair on a fine grid. Both are deterministic and independent
//! of any optimizer RNG.

use crate::availability::AvailabilityMatrix;
use crate::error::{Error, Result};
use crate::pairing::Pairing;
use crate::power::PowerRule;
use crate::rates::{eval_pair, pair_qos_decodable};
use crate::scenario::Scenario;
use crate::topology::Topology;

/// Enumeration bound on users.
pub const MAX_ORACLE_USERS: usize = 8;
/// Enumeration bound on channels.
pub const MAX_ORACLE_CHANNELS: usize = 6;

/// Result of an exhaustive search.
#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Maximum network EE over all feasible pairings.
    pub best_ee: f64,
    /// A pairing achieving it, with the lexicographically first feasible
    /// channel assignment.
    pub best_pairing: Pairing,
    /// δ_μ of each pair of the best pairing.
    pub best_delta: Vec<f64>,
    /// Combinations examined: Σ over pairings of their complete injective
    /// channel assignments (the δ rule is closed-form, grid factor 1).
    pub enumerated_count: u64,
}

/// Enumerates every perfect matching and channel assignment, evaluating EE
/// with `delta_rule`. Ties in EE keep the first pairing in enumeration
/// order (pairings are generated with the lowest free user first).
pub fn exhaustive_pairing(
    scenario: &Scenario,
    topology: &Topology,
    avail: &AvailabilityMatrix,
    delta_rule: &PowerRule,
) -> Result<OracleResult> {
    let n = topology.n_users();
    let m = avail.m_channels();
    if n > MAX_ORACLE_USERS || m > MAX_ORACLE_CHANNELS {
        return Err(Error::OracleTooLarge {
            detail: format!(
                "{n} users × {m} channels exceeds the {MAX_ORACLE_USERS} × {MAX_ORACLE_CHANNELS} bound"
            ),
        });
    }
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidParameter {
            name: "n_users",
            reason: format!("exhaustive search needs an even positive user count, got {n}"),
        });
    }

    let snr = scenario.snr_linear();
    let p = scenario.cluster_power;
    let mut best: Option<(f64, Pairing, Vec<f64>)> = None;
    let mut enumerated: u64 = 0;

    let mut users: Vec<usize> = (0..n).collect();
    let mut current: Vec<(usize, usize)> = Vec::with_capacity(n / 2);
    enumerate_matchings(&mut users, &mut current, &mut |pairs| {
        // Role assignment per pair, then EE (channel choice never affects EE).
        let mut oriented = Vec::with_capacity(pairs.len());
        let mut delta = Vec::with_capacity(pairs.len());
        let mut ee = 0.0;
        for &(a, b) in pairs {
            let (s, w) = if topology.gains[a] > topology.gains[b]
                || (topology.gains[a] == topology.gains[b] && a < b)
            {
                (a, b)
            } else {
                (b, a)
            };
            let (gs, gw) = (topology.gains[s], topology.gains[w]);
            let (dm, dv) = delta_rule.deltas_for(snr, gs, gw)?;
            let ev = eval_pair(snr, gs, gw, dm, dv, p);
            if !pair_qos_decodable(snr, gs, gw, dm, dv) {
                // QoS-violating pairings are not candidates; their channel
                // maps still count as examined combinations.
                ee = f64::NEG_INFINITY;
            }
            ee += ev.pair_ee;
            oriented.push((s, w));
            delta.push(dm);
        }

        let mut assignment = vec![0usize; oriented.len()];
        let mut first: Option<Vec<usize>> = None;
        let maps = count_channel_maps(&oriented, avail, 0, 0u64, &mut assignment, &mut first);
        enumerated += maps;
        if maps > 0 && ee.is_finite() {
            let better = match &best {
                None => true,
                Some((best_ee, _, _)) => ee > *best_ee,
            };
            if better {
                best = Some((
                    ee,
                    Pairing {
                        pairs: oriented,
                        channel_of_pair: first.expect("feasible map exists"),
                        unpaired: vec![],
                    },
                    delta,
                ));
            }
        }
        Ok(())
    })?;

    match best {
        Some((best_ee, best_pairing, best_delta)) => Ok(OracleResult {
            best_ee,
            best_pairing,
            best_delta,
            enumerated_count: enumerated,
        }),
        None => Err(Error::Infeasible {
            scheme: "exhaustive_pairing",
            detail: "no pairing admits a complete channel assignment".into(),
        }),
    }
}

/// Visits every perfect matching of `users`; pairs are emitted with the
/// lowest free user first, so enumeration order is deterministic.
fn enumerate_matchings<F>(
    users: &mut Vec<usize>,
    current: &mut Vec<(usize, usize)>,
    visit: &mut F,
) -> Result<()>
where
    F: FnMut(&[(usize, usize)]) -> Result<()>,
{
    if users.is_empty() {
        return visit(current);
    }
    let first = users[0];
    for i in 1..users.len() {
        let partner = users[i];
        let mut rest: Vec<usize> = Vec::with_capacity(users.len() - 2);
        rest.extend(users.iter().skip(1).filter(|&&u| u != partner));
        current.push((first, partner));
        enumerate_matchings(&mut rest, current, visit)?;
        current.pop();
    }
    Ok(())
}

/// Counts complete injective channel maps for an ordered pair list by
/// backtracking (channels tried ascending), recording the first one found.
fn count_channel_maps(
    pairs: &[(usize, usize)],
    avail: &AvailabilityMatrix,
    k: usize,
    used: u64,
    assignment: &mut [usize],
    first: &mut Option<Vec<usize>>,
) -> u64 {
    if k == pairs.len() {
        if first.is_none() {
            *first = Some(assignment.to_vec());
        }
        return 1;
    }
    let (s, w) = pairs[k];
    let mut count = 0;
    for c in 0..avail.m_channels() {
        if used >> c & 1 == 0 && avail.available(s, c) && avail.available(w, c) {
            assignment[k] = c;
            count += count_channel_maps(pairs, avail, k + 1, used | 1 << c, assignment, first);
        }
    }
    count
}

/// Scans δ_μ over {0, step, …, 1} (δ_ν = 1 − δ_μ) for one pair at unit
/// cluster power, discarding QoS-violating points. Returns the maximizing
/// (δ_μ, EE), ties resolved toward the smaller δ_μ, or `None` when every
/// grid point is infeasible. The step must lie in (0, 0.01].
pub fn grid_delta_search(
    gain_strong: f64,
    gain_weak: f64,
    snr: f64,
    grid_step: f64,
) -> Result<Option<(f64, f64)>> {
    if !(grid_step > 0.0 && grid_step <= 0.01) {
        return Err(Error::InvalidParameter {
            name: "grid_step",
            reason: format!("must lie in (0, 0.01], got {grid_step}"),
        });
    }
    let mut best: Option<(f64, f64)> = None;
    let mut consider = |dm: f64| {
        let dv = 1.0 - dm;
        if !pair_qos_decodable(snr, gain_strong, gain_weak, dm, dv) {
            return;
        }
        let ev = eval_pair(snr, gain_strong, gain_weak, dm, dv, 1.0);
        match best {
            Some((_, ee)) if ev.pair_ee <= ee => {}
            _ => best = Some((dm, ev.pair_ee)),
        }
    };
    let mut i = 0u64;
    loop {
        let dm = i as f64 * grid_step;
        if dm > 1.0 + 1e-12 {
            break;
        }
        consider(dm.min(1.0));
        if dm >= 1.0 {
            break;
        }
        i += 1;
    }
    // Guarantee the endpoint when the step does not divide 1 evenly.
    if ((1.0 / grid_step).round() - 1.0 / grid_step).abs() > 1e-9 {
        consider(1.0);
    }
    Ok(best)
}
