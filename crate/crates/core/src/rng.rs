//! Derivation of independent, reproducible random streams.
//!
//! Every stochastic component draws from a stream keyed by the run seed plus
//! a small tuple of identifiers (zone, person, iteration, ...), so results do
//! not depend on processing order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream domains keep streams for different purposes apart even when the
/// remaining keys coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Synthesis = 1,
    Household = 2,
    Person = 3,
    Replanning = 4,
    Demo = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, domain: Domain, keys: &[u64]) -> u64 {
    let mut h = splitmix64(seed ^ splitmix64(domain as u64));
    for &k in keys {
        h = splitmix64(h ^ splitmix64(k.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    h
}

pub fn stream(seed: u64, domain: Domain, keys: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, domain, keys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream(7, Domain::Person, &[1, 2]).random();
        let b: u64 = stream(7, Domain::Person, &[1, 2]).random();
        let c: u64 = stream(7, Domain::Person, &[2, 1]).random();
        let d: u64 = stream(7, Domain::Household, &[1, 2]).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
