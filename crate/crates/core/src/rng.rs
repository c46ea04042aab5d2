//! Counter-based seed derivation.
//!
//! Every random stream in the crate is addressed by a master seed plus a
//! short path of indices (`[domain, outer, inner, ...]`). The address is
//! mixed into a ChaCha key and the last index selects the ChaCha stream, so
//! the numbers a path sees depend only on its address and never on the order
//! in which workers pick up work.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream domains. Separate domains never share a key.
pub mod domain {
    pub const PATH: u64 = 1;
    pub const BATTY_OUTER: u64 = 2;
    pub const BATTY_INNER: u64 = 3;
    pub const BOOTSTRAP: u64 = 4;
    pub const OVERSHOOT: u64 = 5;
    pub const PROBE: u64 = 6;
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    master: u64,
}

impl SeedTree {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Generator for the stream addressed by `prefix` and `index`.
    pub fn stream(&self, prefix: &[u64], index: u64) -> ChaCha8Rng {
        let mut state = self.master;
        let mut acc = splitmix64(&mut state);
        for &p in prefix {
            state ^= p.wrapping_mul(0xD6E8_FEB8_6659_FD93).rotate_left(17);
            acc ^= splitmix64(&mut state);
        }
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            acc = acc.wrapping_add(splitmix64(&mut state));
            chunk.copy_from_slice(&acc.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(index);
        rng
    }

    /// Generator for simulated path number `index`.
    pub fn path(&self, index: u64) -> ChaCha8Rng {
        self.stream(&[domain::PATH], index)
    }
}
