//! Seeded, stream-labelled random number generation.
//!
//! Every stochastic draw in the crate (oracle noise, model perturbations,
//! power-iteration starts, graph sampling) comes from a ChaCha generator
//! derived from a run seed plus a fixed stream label, so whole runs are
//! reproducible from a single `u64`.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream labels. Each call site that needs independent randomness gets its
/// own label; per-column or per-iteration sites add an offset to a base.
pub mod stream {
    /// Gradient estimate for the linear term of the model.
    pub const MODEL_GRADIENT: u64 = 1;
    /// Gradient estimate at the model base point for the Hessian columns.
    pub const HESSIAN_BASE: u64 = 2;
    /// Gaussian perturbation of the linear term.
    pub const MODEL_ZETA: u64 = 3;
    /// Uniform diagonal perturbation of the Hessian.
    pub const MODEL_GAMMA: u64 = 4;
    /// Gaussian start of the projected power iteration.
    pub const POWER_INIT: u64 = 5;
    /// Erdos-Renyi edge sampling.
    pub const ER_GRAPH: u64 = 6;
    /// Base label for Hessian column `i`; the column uses `HESSIAN_COL + i`.
    pub const HESSIAN_COL: u64 = 1_000;
}

/// A generator for `(seed, label)`. Distinct labels give independent streams
/// of the same seeded run.
pub fn stream_rng(seed: u64, label: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label);
    rng
}

/// Mixes an outer-iteration counter into a run seed so every iteration of a
/// driver loop draws fresh, reproducible randomness (splitmix64 finalizer).
pub fn mix_seed(seed: u64, iteration: u64) -> u64 {
    let mut z = seed ^ iteration.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
