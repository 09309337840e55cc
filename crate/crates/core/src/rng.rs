//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a generator keyed by
//! `(seed, stream, counter)`. The particle filter keys its step generator on
//! the time index, so re-running the filter over a modified suffix of the data
//! reuses exactly the same variates at every time step (common random numbers).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Named sub-streams consumed by the individual operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    Simulate = 1,
    FilterInit = 2,
    FilterStep = 3,
    Forecast = 4,
    Anneal = 5,
    Derive = 6,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(seed: u64, stream: Stream, counter: u64) -> [u8; 32] {
    let mut state = seed ^ (stream as u64).rotate_left(48);
    let _ = splitmix64(&mut state);
    state ^= counter.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// Generator for `counter` within `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: Stream, counter: u64) -> StreamRng {
    ChaCha8Rng::from_seed(mix(seed, stream, counter))
}

/// Derives a child seed from a master seed and a stage label.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut acc = master;
    for b in label.bytes() {
        acc = splitmix64(&mut acc) ^ u64::from(b);
    }
    let mut state = acc ^ (Stream::Derive as u64);
    splitmix64(&mut state)
}
