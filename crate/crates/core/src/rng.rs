//! Counter-based random streams.
//!
//! Every random number is a pure function of `(seed, key...)`, so a
//! simulation draws the same noise for a given (replica, particle label,
//! step, component) no matter how work is split across threads. Seed and
//! key words form the ChaCha8 key, the key length selects the stream and
//! the component is the position inside the stream.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Longest key accepted by [`CounterRng`].
pub const MAX_KEY_LEN: usize = 3;

/// A stateless stream: `(seed, key)` in, numbers out.
#[derive(Debug, Clone, Copy)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The generator for `key`.
    pub fn stream(&self, key: &[u64]) -> ChaCha8Rng {
        assert!(key.len() <= MAX_KEY_LEN, "key longer than {MAX_KEY_LEN} words");
        let mut words = [0u64; 4];
        words[0] = self.seed;
        words[1..=key.len()].copy_from_slice(key);
        let mut bytes = [0u8; 32];
        for (chunk, w) in bytes.chunks_exact_mut(8).zip(&words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(bytes);
        rng.set_stream(key.len() as u64);
        rng
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform(&self, key: &[u64]) -> f64 {
        self.stream(key).sample(Open01)
    }

    pub fn normal(&self, key: &[u64]) -> f64 {
        self.stream(key).sample(StandardNormal)
    }

    /// Fills `out` with independent standard normals for `key`.
    pub fn fill_normals(&self, key: &[u64], out: &mut [f64]) {
        let mut rng = self.stream(key);
        out.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
    }
}

/// Sequential stream for non-simulation sampling (random test points,
/// configurations).
#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64, domain: u64) -> Self {
        Self {
            rng: CounterRng::new(seed).stream(&[domain]),
        }
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.sample(Open01)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}
