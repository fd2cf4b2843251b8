use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator for restart `stream` under a user seed.
///
/// Every restart draws from its own stream so that serial and parallel
/// evaluation see identical random numbers.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
