//! Named random streams.
//!
//! Every stream is a ChaCha8 generator seeded from the master seed, a label and
//! the identifiers of the trial it serves. Streams therefore do not depend on
//! which worker runs a trial or on the order trials run in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a of the label.
fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub fn stream_seed(master_seed: u64, label: &str, ids: &[u64]) -> u64 {
    let mut h = splitmix(master_seed ^ label_hash(label));
    for &id in ids {
        h = splitmix(h ^ id);
    }
    h
}

pub fn stream(master_seed: u64, label: &str, ids: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master_seed, label, ids))
}

pub const GEOMETRY: &str = "geometry";
pub const REALIZATION: &str = "realization";
pub const SCHEDULE: &str = "schedule";
pub const NOISE: &str = "noise";
pub const PEP_SCHEDULE: &str = "pep-schedule";
