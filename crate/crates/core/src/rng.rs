// Copyright 2026 The loadprof Authors
// SPDX-License-Identifier: Apache-2.0

//! Deterministic random substreams.
//!
//! Every independent unit of work (a household, a resampling repetition)
//! draws from its own ChaCha8 stream. The 256-bit key is derived from the
//! user seed and a domain tag with SplitMix64; the unit index selects the
//! ChaCha stream. Results therefore do not depend on scheduling or on the
//! number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keep unrelated consumers of one seed apart.
pub mod domain {
    pub const SYNTH_HOUSEHOLD: u64 = 0x5359_4e54_4800_0001;
    pub const SYNTH_ATTRIBUTES: u64 = 0x5359_4e54_4800_0002;
    pub const WELCH_REPETITION: u64 = 0x5745_4c43_4800_0001;
}

/// One SplitMix64 step.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream `index` of the generator keyed by `(seed, domain)`.
pub fn substream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut state = seed ^ domain.rotate_left(17);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
