//! Seeded random streams.
//!
//! Every vehicle owns a ChaCha8 stream selected by its id under the run
//! seed. Streams are independent, so adding a vehicle leaves the draws of
//! all others untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream reserved for draws that belong to no vehicle (e.g. shadowing).
pub const SHARED_STREAM: u64 = u64::MAX;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn vehicle_stream(seed: u64, vehicle: u32) -> ChaCha8Rng {
    stream(seed, u64::from(vehicle))
}
