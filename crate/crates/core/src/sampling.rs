//! Seeded, reproducible point streams.
//!
//! Candidate points over the torus come from an additive-recurrence
//! low-discrepancy sequence (the generalized golden ratio construction) with
//! a seeded offset, so runs are deterministic for a given seed no matter how
//! many workers evaluate the candidates. Anything that needs plain
//! pseudo-randomness uses ChaCha8 seeded through a SplitMix finalizer, which
//! also derives independent per-purpose streams from one user seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; good avalanche, used to derive sub-seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive the seed for a named sub-stream of a run seed.
pub fn stream_seed(seed: u64, stream: &str) -> u64 {
    let mut h = 0xcbf29ce484222325u64; // FNV-1a over the stream name
    for b in stream.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    mix64(seed ^ h)
}

/// Seeded ChaCha8 generator for a named sub-stream.
pub fn stream_rng(seed: u64, stream: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, stream))
}

/// Per-index generator inside a named sub-stream; used where work items
/// need independent deterministic randomness regardless of the order a
/// parallel scheduler visits them in.
pub fn indexed_rng(seed: u64, stream: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(
        stream_seed(seed, stream) ^ mix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15)),
    ))
}

/// Low-discrepancy sequence on `[0,1)^D`: `x_n = frac(s + n α)` where `α` is
/// built from the positive root of `x^(D+1) = x + 1` and `s` is a seeded
/// rotation.
#[derive(Debug, Clone)]
pub struct RdSeq<const D: usize> {
    state: [f64; D],
    step: [f64; D],
}

impl<const D: usize> RdSeq<D> {
    pub fn new(seed: u64) -> Self {
        // root of x^(D+1) = x + 1 by Newton from 2.0
        let mut g = 2.0f64;
        for _ in 0..64 {
            let p = g.powi(D as i32 + 1) - g - 1.0;
            let dp = (D as f64 + 1.0) * g.powi(D as i32) - 1.0;
            g -= p / dp;
        }
        let mut step = [0.0; D];
        for (i, s) in step.iter_mut().enumerate() {
            *s = (1.0 / g.powi(i as i32 + 1)).fract();
        }
        let mut state = [0.0; D];
        let mut z = mix64(seed ^ seed_dim_tag(D));
        for s in state.iter_mut() {
            // 53 uniform bits per coordinate
            *s = (z >> 11) as f64 / (1u64 << 53) as f64;
            z = mix64(z);
        }
        Self { state, step }
    }

    /// Next point in `[0,1)^D`.
    pub fn next_point(&mut self) -> [f64; D] {
        let out = self.state;
        for i in 0..D {
            self.state[i] += self.step[i];
            if self.state[i] >= 1.0 {
                self.state[i] -= 1.0;
            }
        }
        out
    }
}

/// Fold the dimension into the rotation seed so different-D streams with the
/// same seed don't alias.
fn seed_dim_tag(d: usize) -> u64 {
    0x9e37_79b9 ^ ((d as u64) << 32)
}

/// Uniform unit vector in 3-space from a seeded generator.
pub fn random_unit3(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-4 && n2 <= 1.0 {
            let n = n2.sqrt();
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}
