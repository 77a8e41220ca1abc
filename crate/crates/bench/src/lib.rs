//! Fixtures shared by the benchmarks.

use hypernull_core::figures::MOMENTUM;
use hypernull_core::{Noise, Scenario, Squeeze};

/// Momentum-squeezed triad with `gamma = lambda = 1`.
pub fn triad(noise: Noise) -> Scenario {
    Scenario::hypergraph(3, 1.0, 1.0, MOMENTUM, noise)
}

/// Unsqueezed hypergraph state on `k` modes.
pub fn plain(k: usize, noise: Noise) -> Scenario {
    Scenario::hypergraph(k, 1.0, 1.0, Squeeze::None, noise)
}
