//! Seeded RNG construction with per-operation stream separation.
//!
//! Every randomized operation draws from its own ChaCha stream, so reusing
//! one seed across data generation, perturbation, and solving never makes
//! their draws collide.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Stream ids; each randomized operation owns one.
pub mod stream {
    pub const SAMPLE: u64 = 1;
    pub const SYNTHETIC: u64 = 2;
    pub const SPLIT: u64 = 3;
    pub const FLIP: u64 = 4;
    pub const P_RESTRICTED: u64 = 5;
    pub const COUPLING: u64 = 6;
    pub const FAMILY_C_MIX: u64 = 7;
    pub const SOLVER_INIT: u64 = 8;
}

pub fn seeded(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
