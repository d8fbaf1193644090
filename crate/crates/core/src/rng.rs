//! Seeded random substreams.
//!
//! ChaCha is counter based: a `(seed, stream)` pair selects an independent
//! keystream, so the draws for bin `k` or trial `k` do not depend on which
//! thread evaluates it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator family name recorded in manifests.
pub const GENERATOR: &str = "ChaCha8";

/// Independent generator for substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
