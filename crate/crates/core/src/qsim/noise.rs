use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Per-gate depolarizing noise sampled as Pauli trajectories: after each
/// gate, every touched qubit independently suffers a uniformly random X, Y
/// or Z with probability `p1` (single-qubit gates) or `p2` (multi-qubit).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub p1: f64,
    pub p2: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(p1: f64, p2: f64, seed: u64) -> Result<Self> {
        for (field, p) in [("p1", p1), ("p2", p2)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(field, format!("probability {p} outside [0, 1]")));
            }
        }
        Ok(Self { p1, p2, seed })
    }

    pub fn depolarizing(p: f64, seed: u64) -> Result<Self> {
        Self::new(p, p, seed)
    }

    pub fn is_noiseless(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0
    }

    /// Independent generator for trajectory `stream`.
    pub fn trajectory_rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    pub(crate) fn error_probability(&self, touched: usize) -> f64 {
        if touched <= 1 {
            self.p1
        } else {
            self.p2
        }
    }
}

/// 0 = no error, 1..=3 = X, Y, Z.
pub(crate) fn sample_pauli_error(rng: &mut impl Rng, p: f64) -> u8 {
    if rng.random::<f64>() < p {
        rng.random_range(1..=3)
    } else {
        0
    }
}
