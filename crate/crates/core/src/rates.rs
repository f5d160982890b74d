//! Achievable rates, QoS checks, and network energy efficiency.
//!
//! All formulas work with the σ²-normalized product `snr · gain`, so noise
//! power never appears as a separate parameter. OMA carries a ½ pre-log
//! (two users time-share the channel); a NOMA pair transmits simultaneously
//! with power split δ_strong + δ_weak ≤ 1 of the cluster budget, and the
//! collector decodes the weak user first, so the strong user's rate sees the
//! weak user's share as interference.

use crate::error::{Error, Result};

const LN_2: f64 = std::f64::consts::LN_2;

/// log₂(1 + x) evaluated stably for small x.
#[inline]
pub fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// OMA rate ½·log₂(1 + snr·gain).
pub fn oma_rate(snr: f64, gain: f64) -> f64 {
    0.5 * log2_1p(snr * gain)
}

/// Weak user's NOMA rate log₂(1 + δ_ν·snr·g_ν); no interference term appears
/// because the strong user's share is charged entirely to the strong user's
/// own rate expression.
pub fn noma_weak_rate(snr: f64, delta_weak: f64, gain_weak: f64) -> f64 {
    log2_1p(delta_weak * snr * gain_weak)
}

/// Strong user's NOMA rate log₂(1 + δ_μ·snr·g_μ / (δ_ν·snr·g_μ + 1)).
/// In this model the interference term in the denominator is scaled by the
/// strong user's own gain g_μ, so the strong user's SINR saturates at δ_μ/δ_ν
/// as the gain grows.
pub fn noma_strong_rate(snr: f64, delta_strong: f64, delta_weak: f64, gain_strong: f64) -> f64 {
    let sg = snr * gain_strong;
    log2_1p(delta_strong * sg / (delta_weak * sg + 1.0))
}

/// Rates and energy efficiency of one NOMA pair on one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEval {
    /// Strong user's NOMA rate (bits/s/Hz).
    pub rate_strong: f64,
    /// Weak user's NOMA rate (bits/s/Hz).
    pub rate_weak: f64,
    /// Strong user's full-power OMA benchmark rate.
    pub oma_rate_strong: f64,
    /// Weak user's full-power OMA benchmark rate.
    pub oma_rate_weak: f64,
    /// Strong user's power fraction δ_μ.
    pub delta_strong: f64,
    /// Weak user's power fraction δ_ν.
    pub delta_weak: f64,
    /// Cluster power budget P_j in watts.
    pub pair_power: f64,
    /// (rate_strong + rate_weak) / pair_power.
    pub pair_ee: f64,
}

/// Evaluates one pair: NOMA rates under the split, OMA benchmarks, and EE.
pub fn eval_pair(
    snr: f64,
    gain_strong: f64,
    gain_weak: f64,
    delta_strong: f64,
    delta_weak: f64,
    pair_power: f64,
) -> PairEval {
    let rate_strong = noma_strong_rate(snr, delta_strong, delta_weak, gain_strong);
    let rate_weak = noma_weak_rate(snr, delta_weak, gain_weak);
    PairEval {
        rate_strong,
        rate_weak,
        oma_rate_strong: oma_rate(snr, gain_strong),
        oma_rate_weak: oma_rate(snr, gain_weak),
        delta_strong,
        delta_weak,
        pair_power,
        pair_ee: (rate_strong + rate_weak) / pair_power,
    }
}

/// Strict QoS predicate: each user's NOMA rate at its allocated share must
/// reach the ½-pre-log OMA rate at FULL cluster power. Diagnostic only: for
/// unequal gains the two per-user thresholds cross, so no power split can
/// satisfy both members at once — see [`qos_decodable`] for the operative
/// per-user check used by the optimizers and the validator.
pub fn qos_satisfied(ev: &PairEval) -> bool {
    ev.rate_strong >= ev.oma_rate_strong && ev.rate_weak >= ev.oma_rate_weak
}

/// Operative per-user QoS check: with the collector's decode order each
/// user's signal is resolved free of its partner's interference, and the
/// benchmark is the ½-pre-log OMA rate at the same allocated power. Since
/// log₂(1+x) ≥ ½·log₂(1+x) for x ≥ 0, every valid split passes; the check is
/// kept explicit so penalty terms and the validator state their constraint.
pub fn qos_decodable(snr: f64, delta: f64, gain: f64) -> bool {
    let x = delta * snr * gain;
    log2_1p(x) >= 0.5 * log2_1p(x)
}

/// Both pair members pass the operative QoS check.
pub fn pair_qos_decodable(
    snr: f64,
    gain_strong: f64,
    gain_weak: f64,
    delta_strong: f64,
    delta_weak: f64,
) -> bool {
    qos_decodable(snr, delta_strong, gain_strong) && qos_decodable(snr, delta_weak, gain_weak)
}

/// Per-pair power-budget slack tolerance.
const C2_TOL: f64 = 1e-12;
/// Total-power-budget slack tolerance.
const C3_TOL: f64 = 1e-9;

/// Network energy efficiency Σ_j (rate_strong_j + rate_weak_j)/P_j.
///
/// Verifies the per-pair budget (the split may not exceed the pair's power:
/// P_j·(δ_μ+δ_ν) ≤ P_j) and the total budget (Σ P_j ≤ total_power), naming
/// the violated constraint and pair index on failure.
pub fn network_ee(pairs: &[PairEval], total_power: f64) -> Result<f64> {
    let mut sum_power = 0.0;
    let mut ee = 0.0;
    for (j, ev) in pairs.iter().enumerate() {
        let used = ev.pair_power * (ev.delta_strong + ev.delta_weak);
        if used > ev.pair_power + C2_TOL {
            return Err(Error::ConstraintViolated {
                constraint: "C2",
                pair: j,
                detail: format!(
                    "power split uses {used} W of a {} W cluster budget",
                    ev.pair_power
                ),
            });
        }
        sum_power += ev.pair_power;
        ee += ev.pair_ee;
    }
    if sum_power > total_power + C3_TOL {
        return Err(Error::ConstraintViolated {
            constraint: "C3",
            pair: pairs.len().saturating_sub(1),
            detail: format!("Σ P_j = {sum_power} W exceeds total budget {total_power} W"),
        });
    }
    Ok(ee)
}
