//! Shared inputs for the benchmarks.

use ringgather_core::batch::random_initial;
use ringgather_core::ring::Configuration;

/// A fixed valid initial configuration for `(n, k)`.
pub fn spread(n: usize, k: usize) -> Configuration {
    random_initial(n, k, 1).expect("valid instance size")
}
