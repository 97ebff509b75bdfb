//! Seeded instances shared by the benchmarks.

use mac_core::{CMode, Instance};

/// Random instance with `n / 2` agents per side.
pub fn random_instance(n: usize, p: f64, seed: u64) -> Instance {
    Instance::generate_random(n / 2, n / 2, p, CMode::Uniform01, seed).expect("valid parameters")
}

/// Control budget used by the sweeps.
pub fn budget(n: usize) -> usize {
    n.div_ceil(10)
}
