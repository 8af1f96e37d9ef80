//! Counter-based random streams.
//!
//! Every random draw comes from a ChaCha8 generator keyed by
//! `ChaCha8Rng::seed_from_u64(seed ^ domain)` and positioned on stream
//! `index` (`set_stream`). A trial's draws therefore depend only on
//! `(seed, domain, index)`, never on scheduling, so serial and parallel runs
//! consume identical numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tag for channel-parameter draws.
pub const DOMAIN_CHANNEL: u64 = 0x6368_616e_6e65_6c00; // "channel\0"
/// Domain tag for input-qubit draws.
pub const DOMAIN_QUBIT: u64 = 0x7175_6269_7400_0000; // "qubit"
/// Domain tag for simulated detection events.
pub const DOMAIN_SHOT: u64 = 0x7368_6f74_0000_0000; // "shot"
/// Domain tag for oracle verification samples.
pub const DOMAIN_VERIFY: u64 = 0x7665_7269_6679_0000; // "verify"

pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ domain);
    rng.set_stream(index);
    rng
}
