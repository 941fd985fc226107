//! Counter-based deterministic random streams.
//!
//! Each sampled path owns its own stream derived from `(seed, path index)`,
//! so output is identical across runs and across any degree of parallelism.

/// Splitmix64 stream. Cheap, stateless to fork, good enough statistically
/// for Monte-Carlo path sampling.
#[derive(Debug, Clone)]
pub struct CounterRng {
    state: u64,
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { state: seed }
    }

    /// Stream for one unit of work (e.g. one path). The starting state is
    /// the hash of `(seed, index)`, not an offset of it: all splitmix
    /// streams walk the same additive orbit, so offsetting by a multiple of
    /// the increment would make nearby streams shifted copies of each
    /// other.
    pub fn substream(seed: u64, index: u64) -> Self {
        let a = mix(seed ^ 0x9e37_79b9_7f4a_7c15);
        let b = mix(index.wrapping_mul(0xd134_2543_de82_ef95).wrapping_add(0x2545_f491_4f6c_dd1d));
        CounterRng::new(mix(a.wrapping_add(b)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        mix(self.state)
    }

    /// Uniform draw in the open interval (0, 1).
    pub fn next_f64(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }

    /// Uniform draw in (lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Index sampled from the (unnormalized, non-negative) weights.
    pub fn pick_weighted(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut u = self.next_f64() * total;
        for (i, w) in weights.iter().enumerate() {
            u -= w;
            if u <= 0.0 {
                return i;
            }
        }
        weights.len() - 1
    }
}
