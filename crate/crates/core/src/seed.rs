//! Deterministic stream derivation.
//!
//! A single `u64` seeds everything. Independent purposes (channel draws,
//! noise, schedules, ...) and independent trials each get their own ChaCha
//! stream, so adding a draw in one place never shifts the numbers used in
//! another.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// What a derived stream is used for. The discriminant is the ChaCha stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Channel = 1,
    Schedule = 2,
    Noise = 3,
    PrivatePilot = 4,
    Config = 5,
    Attacker = 6,
    Jitter = 7,
    Hash = 8,
    Children = 0xFFFF,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(pub u64);

impl Seed {
    pub fn rng(self, purpose: Purpose) -> ChaCha12Rng {
        let mut r = ChaCha12Rng::seed_from_u64(self.0);
        r.set_stream(purpose as u64);
        r
    }

    /// Seed for trial / sweep point `index`; distinct indices give unrelated seeds.
    pub fn child(self, index: u64) -> Seed {
        let mut r = self.rng(Purpose::Children);
        r.set_word_pos(u128::from(index) * 2);
        Seed(r.next_u64())
    }

    /// Draw a fresh seed from an arbitrary stream.
    pub fn from_rng<R: RngCore + ?Sized>(rng: &mut R) -> Seed {
        Seed(rng.next_u64())
    }
}
