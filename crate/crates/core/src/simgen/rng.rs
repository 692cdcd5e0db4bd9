use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Counter-based generator used throughout the simulation code.
pub type SimRng = ChaCha8Rng;

/// Stream `replication` of the ChaCha8 generator keyed by `seed`. Streams are
/// independent, so any replication can be regenerated in isolation and
/// replications can run in any order or thread.
pub fn replication_rng(seed: u64, replication: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}
