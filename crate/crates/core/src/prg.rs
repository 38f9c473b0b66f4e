//! Seedable counter-mode generator used for every reproducible random choice.
//!
//! The generator is part of the on-disk compatibility contract: a hint is
//! stored only as a 64-bit seed, so the multiset it expands to must never
//! change between builds or platforms. The construction is SplitMix64 run in
//! counter mode:
//!
//! ```text
//! key      = mix64(seed ^ domain)
//! output_t = mix64(key + t * 0x9E3779B97F4A7C15)      t = 1, 2, 3, ...
//! ```
//!
//! where `mix64` is the SplitMix64 finaliser. Bounded draws use Lemire's
//! multiply-and-reject method, so they are exactly uniform.
//!
//! Hint seeds themselves are produced from a master seed the same way:
//! `seed_j = mix64(master + (j + 1) * GAMMA)`.

/// SplitMix64 increment.
pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Domain tag for the subset sampler.
pub const DOMAIN_FLOYD: u64 = 0x464C_4F59_4453_414D;
/// Domain tag for picking a hint's replacement position.
pub const DOMAIN_REPLACEMENT: u64 = 0x5245_504C_5345_4154;
/// Domain tag for the client's own choices (hint pick, replenish target, dummies).
pub const DOMAIN_CLIENT: u64 = 0x434C_4945_4E54_5247;
/// Domain tag for synthetic database contents.
pub const DOMAIN_DATABASE: u64 = 0x4441_5441_4241_5345;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The `counter`-th hint seed generated from `master`.
#[inline]
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    mix64(master.wrapping_add(counter.wrapping_add(1).wrapping_mul(GAMMA)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prg {
    key: u64,
    counter: u64,
}

impl Prg {
    pub fn keyed(seed: u64, domain: u64) -> Self {
        Prg {
            key: mix64(seed ^ domain),
            counter: 0,
        }
    }

    /// Rebuilds a generator from a previously saved [`Prg::state`].
    pub fn from_state(key: u64, counter: u64) -> Self {
        Prg { key, counter }
    }

    pub fn state(&self) -> (u64, u64) {
        (self.key, self.counter)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform value in `[0, bound)`. `bound` must be nonzero.
    #[inline]
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        let mut m = u128::from(self.next_u64()) * u128::from(bound);
        let mut low = m as u64;
        if low < bound {
            let threshold = bound.wrapping_neg() % bound;
            while low < threshold {
                m = u128::from(self.next_u64()) * u128::from(bound);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    /// Uniform value in `[lo, hi]`.
    #[inline]
    pub fn in_range(&mut self, lo: u64, hi: u64) -> u64 {
        debug_assert!(lo <= hi);
        match (hi - lo).checked_add(1) {
            Some(span) => lo + self.below(span),
            None => self.next_u64(),
        }
    }

    pub fn fill_bytes(&mut self, out: &mut [u8]) {
        for chunk in out.chunks_mut(8) {
            let word = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&word[..chunk.len()]);
        }
    }
}
