//! Scenario parameters and key=value config parsing.
//!
//! A [`Scenario`] bundles everything needed to draw one network realization:
//! population sizes, geometry, the transmit SNR, power budgets, the channel
//! availability probability, and the RNG seed. Configs are plain-text
//! `key = value` files with `#` comments; unknown keys are rejected.

use crate::error::{Error, Result};

/// Parameters of one CR-NOMA neighbourhood-network scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Number of smart-meter users N (even, ≥ 2; pairs of two share a channel).
    pub n_users: usize,
    /// Number of cognitive-radio channels M (≥ N/2 so a full pairing can fit).
    pub m_channels: usize,
    /// Coverage radius R_C in meters; users are dropped uniformly in this disc.
    pub coverage_radius: f64,
    /// Path-loss exponent χ (≥ 2).
    pub path_loss_exp: f64,
    /// Transmit SNR in dB (linear SNR is shared by all users).
    pub snr_db: f64,
    /// Per-cluster power budget P_j in watts.
    pub cluster_power: f64,
    /// Total power budget P^total in watts; `None` means N/2 watts so that the
    /// per-cluster budgets exactly exhaust it.
    pub total_power: Option<f64>,
    /// Probability q that a channel is available to a user (i.i.d. Bernoulli).
    pub availability_prob: f64,
    /// Seed for the scenario's random draws.
    pub rng_seed: u64,
    /// Weighting coefficient β₂ of the closed-form power split; β₁ = 1 − β₂.
    pub beta2: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            n_users: 100,
            m_channels: 60,
            coverage_radius: 100.0,
            path_loss_exp: 2.0,
            snr_db: 30.0,
            cluster_power: 1.0,
            total_power: None,
            availability_prob: 0.5,
            rng_seed: 7,
            beta2: 1.0,
        }
    }
}

impl Scenario {
    /// Linear transmit SNR.
    pub fn snr_linear(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }

    /// Number of clusters (pairs) in a full pairing.
    pub fn n_pairs(&self) -> usize {
        self.n_users / 2
    }

    /// Total power budget in watts (defaults to N/2 when not set explicitly).
    pub fn effective_total_power(&self) -> f64 {
        self.total_power
            .unwrap_or(self.n_users as f64 / 2.0)
    }

    /// Checks every invariant, naming the offending parameter on failure.
    pub fn validate(&self) -> Result<()> {
        fn bad(name: &'static str, reason: String) -> Error {
            Error::InvalidParameter { name, reason }
        }
        if self.n_users < 2 || self.n_users % 2 != 0 {
            return Err(bad(
                "n_users",
                format!("must be even and ≥ 2, got {}", self.n_users),
            ));
        }
        if self.m_channels < self.n_users / 2 {
            return Err(bad(
                "m_channels",
                format!(
                    "must be ≥ n_users/2 = {}, got {}",
                    self.n_users / 2,
                    self.m_channels
                ),
            ));
        }
        if !(self.coverage_radius > 0.0 && self.coverage_radius.is_finite()) {
            return Err(bad(
                "coverage_radius",
                format!("must be positive and finite, got {}", self.coverage_radius),
            ));
        }
        if !(self.path_loss_exp >= 2.0 && self.path_loss_exp.is_finite()) {
            return Err(bad(
                "path_loss_exp",
                format!("must be ≥ 2, got {}", self.path_loss_exp),
            ));
        }
        if !self.snr_db.is_finite() {
            return Err(bad("snr_db", format!("must be finite, got {}", self.snr_db)));
        }
        if !(self.cluster_power > 0.0 && self.cluster_power.is_finite()) {
            return Err(bad(
                "cluster_power",
                format!("must be positive and finite, got {}", self.cluster_power),
            ));
        }
        if let Some(p) = self.total_power {
            if !(p > 0.0 && p.is_finite()) {
                return Err(bad(
                    "total_power",
                    format!("must be positive and finite, got {p}"),
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.availability_prob) {
            return Err(bad(
                "availability_prob",
                format!("must be in [0, 1], got {}", self.availability_prob),
            ));
        }
        if !(0.0..=1.0).contains(&self.beta2) {
            return Err(bad(
                "beta2",
                format!("must be in [0, 1], got {}", self.beta2),
            ));
        }
        Ok(())
    }

    /// Applies one config entry. Returns `Ok(false)` when the key does not
    /// belong to the scenario (the caller may route it elsewhere).
    pub fn apply_kv(&mut self, key: &str, value: &str, line: usize) -> Result<bool> {
        match key {
            "n_users" => self.n_users = parse_num(key, value, line)?,
            "m_channels" => self.m_channels = parse_num(key, value, line)?,
            "coverage_radius" => self.coverage_radius = parse_num(key, value, line)?,
            "path_loss_exp" => self.path_loss_exp = parse_num(key, value, line)?,
            "snr_db" => self.snr_db = parse_num(key, value, line)?,
            "cluster_power" => self.cluster_power = parse_num(key, value, line)?,
            "total_power" => self.total_power = Some(parse_num(key, value, line)?),
            "availability_prob" => self.availability_prob = parse_num(key, value, line)?,
            "rng_seed" => self.rng_seed = parse_num(key, value, line)?,
            "beta2" => self.beta2 = parse_num(key, value, line)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Parses a scenario from config text, starting from defaults.
    /// Later entries override earlier ones; unknown keys are an error.
    pub fn from_config_text(text: &str) -> Result<Scenario> {
        let mut sc = Scenario::default();
        for (line, key, value) in parse_kv(text)? {
            if !sc.apply_kv(&key, &value, line)? {
                return Err(Error::InvalidConfig {
                    line,
                    reason: format!("unknown key `{key}`"),
                });
            }
        }
        sc.validate()?;
        Ok(sc)
    }
}

/// Parses `key = value` lines into `(line_number, key, value)` triples.
/// Blank lines and `#` comments are skipped; whitespace around tokens is
/// trimmed.
pub fn parse_kv(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(Error::InvalidConfig {
                line,
                reason: format!("expected `key = value`, got `{trimmed}`"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(Error::InvalidConfig {
                line,
                reason: "empty key".into(),
            });
        }
        if value.is_empty() {
            return Err(Error::InvalidConfig {
                line,
                reason: format!("empty value for key `{key}`"),
            });
        }
        out.push((line, key.to_string(), value.to_string()));
    }
    Ok(out)
}

/// Parses a numeric config value, reporting the line on failure.
pub fn parse_num<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| Error::InvalidConfig {
        line,
        reason: format!("cannot parse `{value}` as a number for key `{key}`"),
    })
}
