//! Network geometry and channel gains.
//!
//! Users are dropped uniformly at random in a disc of radius R_C around the
//! data collector at the origin. Each user's channel gain combines Rayleigh
//! fading (exponentially distributed power with unit mean) with power-law
//! path loss d^(−χ). Distances are floored at one meter so the path-loss
//! model stays bounded near the collector.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::scenario::Scenario;

/// One realization of user positions, fading, and channel gains.
#[derive(Debug, Clone)]
pub struct Topology {
    /// Cartesian coordinates (x, y) in meters, collector at the origin.
    pub positions: Vec<(f64, f64)>,
    /// Distances to the collector in meters, each in (0, R_C].
    pub distances: Vec<f64>,
    /// Rayleigh fading power |h|² per user (unit-mean exponential).
    pub fading_power: Vec<f64>,
    /// Channel gains |g|² = |h|²·d^(−χ).
    pub gains: Vec<f64>,
}

impl Topology {
    /// Number of users in this realization.
    pub fn n_users(&self) -> usize {
        self.gains.len()
    }

    /// Builds a topology directly from channel gains, placing every user at
    /// one meter with fading equal to the gain. Useful for controlled tests.
    pub fn from_gains(gains: Vec<f64>) -> Topology {
        let n = gains.len();
        Topology {
            positions: vec![(1.0, 0.0); n],
            distances: vec![1.0; n],
            fading_power: gains.clone(),
            gains,
        }
    }
}

/// Draws one topology realization. Draw order per user is (radius, angle,
/// fading), so realizations are reproducible from the RNG stream alone.
pub fn generate_topology(sc: &Scenario, rng: &mut impl Rng) -> Topology {
    let n = sc.n_users;
    let min_dist = 1f64.min(sc.coverage_radius);
    let mut positions = Vec::with_capacity(n);
    let mut distances = Vec::with_capacity(n);
    let mut fading_power = Vec::with_capacity(n);
    let mut gains = Vec::with_capacity(n);
    for _ in 0..n {
        // sqrt keeps the areal density uniform over the disc.
        let radial: f64 = rng.gen::<f64>().sqrt() * sc.coverage_radius;
        let d = radial.max(min_dist);
        let theta = rng.gen::<f64>() * std::f64::consts::TAU;
        let h2: f64 = Exp1.sample(rng);
        positions.push((d * theta.cos(), d * theta.sin()));
        distances.push(d);
        fading_power.push(h2);
        gains.push(h2 * d.powf(-sc.path_loss_exp));
    }
    Topology {
        positions,
        distances,
        fading_power,
        gains,
    }
}
