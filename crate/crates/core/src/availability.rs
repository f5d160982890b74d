//! Cognitive-radio channel availability.
//!
//! The availability matrix Γ marks which of the M channels each user may
//! occupy. Entries are i.i.d. Bernoulli(q). A draw that leaves some user with
//! zero channels is rejected and redrawn up to a bounded number of attempts;
//! a NOMA pair can only be scheduled on a channel available to both members,
//! so a fully starved user can never be served.
//!
//! Rows are stored as packed 64-bit words, which makes the pair-intersection
//! query used by the channel matcher a handful of AND operations.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Number of fresh matrices drawn before a starved user is reported.
pub const MAX_REGEN_ATTEMPTS: usize = 16;

/// Per-user channel availability, bit-packed per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AvailabilityMatrix {
    n_users: usize,
    m_channels: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl AvailabilityMatrix {
    /// Creates an all-false matrix.
    pub fn new(n_users: usize, m_channels: usize) -> AvailabilityMatrix {
        let words_per_row = m_channels.div_ceil(64).max(1);
        AvailabilityMatrix {
            n_users,
            m_channels,
            words_per_row,
            bits: vec![0; n_users * words_per_row],
        }
    }

    /// Creates an all-true matrix.
    pub fn all_true(n_users: usize, m_channels: usize) -> AvailabilityMatrix {
        let mut m = AvailabilityMatrix::new(n_users, m_channels);
        for u in 0..n_users {
            for c in 0..m_channels {
                m.set(u, c, true);
            }
        }
        m
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn m_channels(&self) -> usize {
        self.m_channels
    }

    /// Marks channel `c` (un)available for user `u`.
    pub fn set(&mut self, u: usize, c: usize, value: bool) {
        let word = u * self.words_per_row + c / 64;
        let mask = 1u64 << (c % 64);
        if value {
            self.bits[word] |= mask;
        } else {
            self.bits[word] &= !mask;
        }
    }

    /// Whether channel `c` is available to user `u`.
    pub fn available(&self, u: usize, c: usize) -> bool {
        let word = u * self.words_per_row + c / 64;
        self.bits[word] >> (c % 64) & 1 == 1
    }

    /// Packed availability row of one user.
    pub fn row(&self, u: usize) -> &[u64] {
        &self.bits[u * self.words_per_row..(u + 1) * self.words_per_row]
    }

    /// Number of channels available to user `u`.
    pub fn count_available(&self, u: usize) -> usize {
        self.row(u).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Channels available to user `u`, ascending.
    pub fn channels_of(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        iter_bits(self.row(u).to_vec())
    }

    /// Channels available to both users, ascending.
    pub fn common_channels(&self, a: usize, b: usize) -> impl Iterator<Item = usize> + '_ {
        let words: Vec<u64> = self
            .row(a)
            .iter()
            .zip(self.row(b))
            .map(|(x, y)| x & y)
            .collect();
        iter_bits(words)
    }

    /// Writes the packed AND of two rows into `out` (used by hot loops).
    pub fn intersect_rows_into(&self, a: usize, b: usize, out: &mut Vec<u64>) {
        out.clear();
        out.extend(self.row(a).iter().zip(self.row(b)).map(|(x, y)| x & y));
    }
}

fn iter_bits(words: Vec<u64>) -> impl Iterator<Item = usize> {
    words
        .into_iter()
        .enumerate()
        .flat_map(|(wi, mut word)| {
            std::iter::from_fn(move || {
                if word == 0 {
                    None
                } else {
                    let bit = word.trailing_zeros() as usize;
                    word &= word - 1;
                    Some(wi * 64 + bit)
                }
            })
        })
}

/// Draws an availability matrix with i.i.d. Bernoulli(q) entries, redrawing
/// whole matrices until every user has at least one channel. Entries are
/// drawn row-major, one uniform per entry, so the stream is reproducible.
pub fn generate_availability(sc: &Scenario, rng: &mut impl Rng) -> Result<AvailabilityMatrix> {
    let q = sc.availability_prob;
    let mut last_starved = 0;
    for _ in 0..MAX_REGEN_ATTEMPTS {
        let mut m = AvailabilityMatrix::new(sc.n_users, sc.m_channels);
        for u in 0..sc.n_users {
            for c in 0..sc.m_channels {
                if rng.gen::<f64>() < q {
                    m.set(u, c, true);
                }
            }
        }
        match (0..sc.n_users).find(|&u| m.count_available(u) == 0) {
            None => return Ok(m),
            Some(u) => last_starved = u,
        }
    }
    Err(Error::StarvedUser {
        user: last_starved,
        attempts: MAX_REGEN_ATTEMPTS,
    })
}
