//! Power allocation within pairs: fixed splits, the closed-form rule, and
//! the metaheuristic search.
//!
//! Every pair splits its cluster budget P_j between the strong user (δ_μ)
//! and the weak user (δ_ν = 1 − δ_μ). Three allocators are provided:
//! a fixed preset (FPA), a closed-form β-weighted rule (BPA), and a
//! zebra-optimization search over the per-pair split vector (the power stage
//! of the joint pairing + power pipeline), seeded with the BPA and FPA
//! points so it can never do worse than either.

use crate::error::{Error, Result};
use crate::pairing::Pairing;
use crate::rates::{eval_pair, network_ee, pair_qos_decodable, PairEval};
use crate::scenario::Scenario;
use crate::topology::Topology;
use crate::zoa::{self, ZoaConfig};

/// Penalty charged per QoS-violating pair inside the search objective.
const QOS_PENALTY: f64 = 1e6;
/// Slack for the up-front total-power check.
const C3_TOL: f64 = 1e-9;

/// Fixed power allocation: returns (δ_ν, δ_μ) = (0.75, 0.25).
pub fn fpa() -> (f64, f64) {
    (0.75, 0.25)
}

/// Closed-form β-weighted split.
///
/// δ_μ = β₁/(1+√(1+pg_μ)) + β₂/(1+√(1+pg_ν)) and δ_ν = 1 − δ_μ, where the
/// `p_gain` arguments are the σ²-normalized received powers snr·|g|².
/// Returns (δ_μ, δ_ν). The weights must satisfy β₁ + β₂ = 1 within 1e-9.
pub fn bpa(
    beta1: f64,
    beta2: f64,
    p_gain_strong: f64,
    p_gain_weak: f64,
) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&beta1) || !(0.0..=1.0).contains(&beta2) {
        return Err(Error::InvalidParameter {
            name: "beta1/beta2",
            reason: format!("weights must lie in [0, 1], got ({beta1}, {beta2})"),
        });
    }
    if (beta1 + beta2 - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter {
            name: "beta1/beta2",
            reason: format!("weights must sum to 1, got {beta1} + {beta2}"),
        });
    }
    let term = |pg: f64| 1.0 / (1.0 + (1.0 + pg).sqrt());
    let delta_strong = beta1 * term(p_gain_strong) + beta2 * term(p_gain_weak);
    Ok((delta_strong, 1.0 - delta_strong))
}

/// How a pair's power split is chosen when evaluating a pairing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerRule {
    /// Closed-form rule with weights (1 − β₂, β₂).
    Bpa { beta2: f64 },
    /// The same fixed split for every pair.
    Fixed { delta_strong: f64, delta_weak: f64 },
}

impl PowerRule {
    /// The fixed preset split.
    pub fn fpa() -> PowerRule {
        let (delta_weak, delta_strong) = fpa();
        PowerRule::Fixed {
            delta_strong,
            delta_weak,
        }
    }

    /// Resolves the split (δ_μ, δ_ν) for one pair.
    pub fn deltas_for(&self, snr: f64, gain_strong: f64, gain_weak: f64) -> Result<(f64, f64)> {
        match *self {
            PowerRule::Bpa { beta2 } => {
                bpa(1.0 - beta2, beta2, snr * gain_strong, snr * gain_weak)
            }
            PowerRule::Fixed {
                delta_strong,
                delta_weak,
            } => Ok((delta_strong, delta_weak)),
        }
    }
}

/// Power split and budget of one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPower {
    pub delta_strong: f64,
    pub delta_weak: f64,
    /// Cluster budget P_j in watts.
    pub pair_power: f64,
}

/// Per-pair power decisions for a whole pairing.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub records: Vec<PairPower>,
}

/// Search-space shape of the power stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PowerSearchMode {
    /// Optimize one δ_μ per pair; P_j stays at the cluster budget (default).
    #[default]
    SplitOnly,
    /// Optimize (δ_μ, P_j) jointly; P_j ∈ (0, cluster_power], with the total
    /// budget enforced through a penalty.
    SplitAndPower,
}

/// Output of the power-stage search.
#[derive(Debug, Clone)]
pub struct ZouppaResult {
    pub allocation: PowerAllocation,
    /// Network EE of the returned allocation.
    pub ee: f64,
    /// EE of the injected closed-form (BPA) seed — the returned EE is ≥ this
    /// by greedy acceptance.
    pub bpa_seed_ee: f64,
    /// EE of the injected fixed-split (FPA) seed.
    pub fpa_seed_ee: f64,
    /// Best-fitness trace of the underlying optimizer run.
    pub trace: Vec<f64>,
    pub iterations: usize,
}

/// Optimizes power splits for a fixed pairing (mode [`PowerSearchMode::SplitOnly`]).
pub fn zouppa(
    pairing: &Pairing,
    scenario: &Scenario,
    topology: &Topology,
    zoa_config: &ZoaConfig,
) -> Result<ZouppaResult> {
    zouppa_with(pairing, scenario, topology, zoa_config, PowerSearchMode::SplitOnly)
}

/// Optimizes power for a fixed pairing with an explicit search-space mode.
pub fn zouppa_with(
    pairing: &Pairing,
    scenario: &Scenario,
    topology: &Topology,
    zoa_config: &ZoaConfig,
    mode: PowerSearchMode,
) -> Result<ZouppaResult> {
    let n_pairs = pairing.pairs.len();
    if n_pairs == 0 {
        return Err(Error::Infeasible {
            scheme: "zouppa",
            detail: "pairing has no pairs to allocate power for".into(),
        });
    }
    let snr = scenario.snr_linear();
    let p = scenario.cluster_power;
    let total = scenario.effective_total_power();
    if mode == PowerSearchMode::SplitOnly && n_pairs as f64 * p > total + C3_TOL {
        return Err(Error::Infeasible {
            scheme: "zouppa",
            detail: format!(
                "{n_pairs} clusters at {p} W exceed the total budget {total} W"
            ),
        });
    }

    let gains: Vec<(f64, f64)> = pairing
        .pairs
        .iter()
        .map(|&(s, w)| (topology.gains[s], topology.gains[w]))
        .collect();

    // Seeds: the closed-form rule and the fixed preset, pair by pair.
    let beta2 = scenario.beta2;
    let mut bpa_seed = Vec::with_capacity(n_pairs);
    for &(gs, gw) in &gains {
        let (dm, _) = bpa(1.0 - beta2, beta2, snr * gs, snr * gw)?;
        bpa_seed.push(dm);
    }
    let (_, fpa_dm) = fpa();
    let mut fpa_seed = vec![fpa_dm; n_pairs];

    let min_power = 1e-6 * p;
    let dimension = match mode {
        PowerSearchMode::SplitOnly => n_pairs,
        PowerSearchMode::SplitAndPower => 2 * n_pairs,
    };
    let mut bounds = vec![(0.0, 1.0); n_pairs];
    if mode == PowerSearchMode::SplitAndPower {
        bounds.extend(std::iter::repeat((min_power, p)).take(n_pairs));
        let seed_power = p.min(total / n_pairs as f64).max(min_power);
        bpa_seed.extend(std::iter::repeat(seed_power).take(n_pairs));
        fpa_seed.extend(std::iter::repeat(seed_power).take(n_pairs));
    }
    let config = ZoaConfig {
        dimension,
        bounds,
        ..zoa_config.clone()
    };

    let objective = |x: &[f64]| -> f64 {
        let mut fitness = 0.0;
        let mut sum_power = 0.0;
        for (j, &(gs, gw)) in gains.iter().enumerate() {
            let dm = x[j];
            let dv = 1.0 - dm;
            let pj = match mode {
                PowerSearchMode::SplitOnly => p,
                PowerSearchMode::SplitAndPower => x[n_pairs + j],
            };
            let ev = eval_pair(snr, gs, gw, dm, dv, pj);
            fitness += ev.pair_ee;
            sum_power += pj;
            if !pair_qos_decodable(snr, gs, gw, dm, dv) {
                fitness -= QOS_PENALTY;
            }
        }
        if sum_power > total + C3_TOL {
            fitness -= QOS_PENALTY;
        }
        fitness
    };

    let result = zoa::optimize_seeded(objective, &config, &[bpa_seed, fpa_seed])?;

    if result.best.fitness <= -QOS_PENALTY / 2.0 {
        let x = &result.best.position;
        let violating: Vec<usize> = gains
            .iter()
            .enumerate()
            .filter(|&(j, &(gs, gw))| !pair_qos_decodable(snr, gs, gw, x[j], 1.0 - x[j]))
            .map(|(j, _)| j)
            .collect();
        return Err(Error::Infeasible {
            scheme: "zouppa",
            detail: format!("no QoS-satisfying split found; violating pairs {violating:?}"),
        });
    }

    let x = &result.best.position;
    let records: Vec<PairPower> = (0..n_pairs)
        .map(|j| PairPower {
            delta_strong: x[j],
            delta_weak: 1.0 - x[j],
            pair_power: match mode {
                PowerSearchMode::SplitOnly => p,
                PowerSearchMode::SplitAndPower => x[n_pairs + j],
            },
        })
        .collect();
    let evals: Vec<PairEval> = records
        .iter()
        .zip(&gains)
        .map(|(r, &(gs, gw))| eval_pair(snr, gs, gw, r.delta_strong, r.delta_weak, r.pair_power))
        .collect();
    let ee = network_ee(&evals, total)?;

    Ok(ZouppaResult {
        allocation: PowerAllocation { records },
        ee,
        bpa_seed_ee: result.seed_fitness[0],
        fpa_seed_ee: result.seed_fitness[1],
        trace: result.trace,
        iterations: result.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairing::evaluate_pairing;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fpa_is_the_fixed_preset() {
        let (dv, dm) = fpa();
        assert_eq!((dv, dm), (0.75, 0.25));
        assert_eq!(dv + dm, 1.0);
        // Satisfies the per-pair budget at P_j = 1.
        assert!(1.0 * (dv + dm) <= 1.0);
    }

    #[test]
    fn bpa_hand_values() {
        // Equal weights, zero gains: each term is 1/(1+1) weighted by 0.5.
        let (dm, dv) = bpa(0.5, 0.5, 0.0, 0.0).unwrap();
        assert_relative_eq!(dm, 0.5, epsilon = 1e-12);
        assert_relative_eq!(dv, 0.5, epsilon = 1e-12);
        // β₂ = 1 puts all weight on the weak user's term: 1/(1+√4).
        let (dm, dv) = bpa(0.0, 1.0, 123.0, 3.0).unwrap();
        assert_relative_eq!(dm, 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(dv, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn bpa_rejects_bad_weights() {
        assert!(bpa(0.5, 0.6, 1.0, 1.0).is_err());
        assert!(bpa(-0.1, 1.1, 1.0, 1.0).is_err());
        // Within the 1e-9 slack is accepted.
        assert!(bpa(0.5, 0.5 + 1e-10, 1.0, 1.0).is_ok());
    }

    #[test]
    fn bpa_split_sums_to_one_exactly_and_favors_weak() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100_000 {
            let beta2 = rng.gen::<f64>();
            let pg_s = rng.gen::<f64>() * 1e4;
            let pg_w = rng.gen::<f64>() * pg_s;
            let (dm, dv) = bpa(1.0 - beta2, beta2, pg_s, pg_w).unwrap();
            assert_eq!(dm + dv, 1.0, "split must sum to exactly 1");
            assert!(dm > 0.0 && dm <= 0.5, "δ_μ = {dm} out of (0, 0.5]");
            assert!(dv >= 0.5);
        }
    }

    #[test]
    fn power_rule_resolution() {
        let rule = PowerRule::Fixed {
            delta_strong: 0.25,
            delta_weak: 0.75,
        };
        assert_eq!(rule.deltas_for(1000.0, 0.5, 0.1).unwrap(), (0.25, 0.75));
        let rule = PowerRule::Bpa { beta2: 1.0 };
        let (dm, _) = rule.deltas_for(1.0, 5.0, 3.0).unwrap();
        assert_relative_eq!(dm, 1.0 / 3.0, epsilon = 1e-12);
        assert_eq!(PowerRule::fpa().deltas_for(1.0, 1.0, 1.0).unwrap(), (0.25, 0.75));
    }

    fn single_pair_setup(gs: f64, gw: f64) -> (Scenario, Topology, Pairing) {
        let sc = Scenario {
            n_users: 2,
            m_channels: 1,
            snr_db: 30.0,
            ..Scenario::default()
        };
        let topo = Topology::from_gains(vec![gs, gw]);
        let pairing = Pairing {
            pairs: vec![(0, 1)],
            channel_of_pair: vec![0],
            unpaired: vec![],
        };
        (sc, topo, pairing)
    }

    #[test]
    fn zouppa_dominates_bpa_seed_on_equal_gains() {
        let (sc, topo, pairing) = single_pair_setup(0.01, 0.01);
        let sc = Scenario { snr_db: 0.0, ..sc };
        let cfg = ZoaConfig::for_unit_box(1, 4);
        let result = zouppa(&pairing, &sc, &topo, &cfg).unwrap();
        let (_, bpa_ee) =
            evaluate_pairing(&pairing, &sc, &topo, &PowerRule::Bpa { beta2: 1.0 }).unwrap();
        assert!(result.ee >= bpa_ee);
        assert_relative_eq!(result.bpa_seed_ee, bpa_ee, epsilon = 1e-12);
    }

    #[test]
    fn zouppa_dominates_both_seeds_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for trial in 0..20 {
            let a = rng.gen::<f64>() * 0.1;
            let b = rng.gen::<f64>() * 0.1;
            let (sc, topo, pairing) = single_pair_setup(a.max(b), a.min(b));
            let cfg = ZoaConfig::for_unit_box(1, trial);
            let result = zouppa(&pairing, &sc, &topo, &cfg).unwrap();
            assert!(result.ee >= result.bpa_seed_ee);
            assert!(result.ee >= result.fpa_seed_ee);
            let rec = result.allocation.records[0];
            assert!(rec.delta_strong >= 0.0 && rec.delta_strong <= 1.0);
            assert_eq!(rec.delta_strong + rec.delta_weak, 1.0);
            assert_eq!(rec.pair_power, sc.cluster_power);
        }
    }

    #[test]
    fn zouppa_rejects_overcommitted_total_budget() {
        let (sc, topo, pairing) = single_pair_setup(0.05, 0.01);
        let sc = Scenario {
            total_power: Some(0.5),
            ..sc
        };
        match zouppa(&pairing, &sc, &topo, &ZoaConfig::for_unit_box(1, 1)) {
            Err(Error::Infeasible { scheme, .. }) => assert_eq!(scheme, "zouppa"),
            other => panic!("expected Infeasible, got {other:?}"),
        }
    }

    #[test]
    fn zouppa_rejects_empty_pairing() {
        let (sc, topo, _) = single_pair_setup(0.05, 0.01);
        let empty = Pairing {
            pairs: vec![],
            channel_of_pair: vec![],
            unpaired: vec![0, 1],
        };
        assert!(zouppa(&empty, &sc, &topo, &ZoaConfig::for_unit_box(1, 1)).is_err());
    }

    #[test]
    fn split_and_power_mode_respects_budgets() {
        let (sc, topo, pairing) = single_pair_setup(0.05, 0.01);
        let cfg = ZoaConfig::for_unit_box(1, 8);
        let result = zouppa_with(
            &pairing,
            &sc,
            &topo,
            &cfg,
            PowerSearchMode::SplitAndPower,
        )
        .unwrap();
        let rec = result.allocation.records[0];
        assert!(rec.pair_power > 0.0 && rec.pair_power <= sc.cluster_power);
        // The search may trade power against rate, but never does worse than
        // the full-budget closed-form seed.
        assert!(result.ee >= result.bpa_seed_ee);
    }

    #[test]
    fn zouppa_is_deterministic() {
        let (sc, topo, pairing) = single_pair_setup(0.07, 0.002);
        let cfg = ZoaConfig::for_unit_box(1, 33);
        let a = zouppa(&pairing, &sc, &topo, &cfg).unwrap();
        let b = zouppa(&pairing, &sc, &topo, &cfg).unwrap();
        assert_eq!(a.allocation, b.allocation);
        assert_eq!(a.ee, b.ee);
    }
}
