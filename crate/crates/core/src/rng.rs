//! Counter-based random streams.
//!
//! A [`CounterRng`] is fully determined by a key of 64-bit words (seed,
//! domain tag, iteration, individual, ...). Two streams built from the same key
//! produce the same sequence no matter which thread builds them or in which
//! order, which is what makes the augmentation step reproducible when it is
//! evaluated in parallel.

use rand::RngCore;

/// Domain tags keep streams for different purposes disjoint.
pub mod tag {
    pub const AUGMENT: u64 = 0x6175_676d_656e_7431;
    pub const SIMULATE: u64 = 0x7369_6d75_6c61_7465;
    pub const CENSOR: u64 = 0x6365_6e73_6f72_696e;
    pub const CHAIN: u64 = 0x6368_6169_6e73_6565;
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold a key into a single stream identifier.
pub fn derive_key(words: &[u64]) -> u64 {
    let mut h = mix64(0x243F_6A88_85A3_08D3 ^ words.len() as u64);
    for &w in words {
        h = mix64(h ^ mix64(w.wrapping_add(GOLDEN_GAMMA)));
    }
    h
}

#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(words: &[u64]) -> Self {
        Self {
            key: derive_key(words),
            counter: 0,
        }
    }

    /// Stream for one augmentation cell row `(i, l)` of one iteration.
    pub fn for_cell(seed: u64, iteration: u64, individual: usize, time: usize) -> Self {
        Self::new(&[seed, tag::AUGMENT, iteration, individual as u64, time as u64])
    }

    #[inline]
    pub fn next_word(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key ^ mix64(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Uniform draw on the open interval (0, 1).
    #[inline]
    pub fn open01(&mut self) -> f64 {
        ((self.next_word() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_word() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next_word()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_word().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
