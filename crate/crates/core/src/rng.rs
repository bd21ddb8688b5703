//! Deterministic per-path random streams.
//!
//! Every simulated path derives independent generators for price shocks,
//! volatility shocks and order-book events from `(seed, path_index)`.
//! Results are therefore identical regardless of how paths are scheduled
//! across worker threads.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STREAM_PRICE: u64 = 0x50524943; // "PRIC"
const STREAM_VOL: u64 = 0x564f4c41; // "VOLA"
const STREAM_EVENTS: u64 = 0x4556454e; // "EVEN"

/// splitmix64 finalizer; mixes seed, path index and a stream tag.
fn mix(seed: u64, path: u64, tag: u64) -> u64 {
    let mut z = seed
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add(path.wrapping_mul(0xbf58476d1ce4e5b9))
        .wrapping_add(tag.wrapping_mul(0x94d049bb133111eb));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// One generator per independent source of randomness in a path.
pub struct PathStreams {
    pub price: Stream,
    pub vol: Stream,
    pub events: Stream,
}

impl PathStreams {
    pub fn new(seed: u64, path_index: u64) -> Self {
        Self {
            price: Stream::new(mix(seed, path_index, STREAM_PRICE)),
            vol: Stream::new(mix(seed, path_index, STREAM_VOL)),
            events: Stream::new(mix(seed, path_index, STREAM_EVENTS)),
        }
    }
}

/// A seeded ChaCha8 generator with the few draw kinds the engine needs.
pub struct Stream(ChaCha8Rng);

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Fair coin mapped to +1.0 / -1.0.
    pub fn coin(&mut self) -> f64 {
        if self.0.next_u64() >> 63 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// Uniform draw in the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }

    /// Standard normal via Box-Muller; consumes two uniforms.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
