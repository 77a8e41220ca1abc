//! Shared physical conventions.
//!
//! Quadratures satisfy `[q, p] = i`, so the vacuum variance of either
//! quadrature is one half. Both the phase-space moment engine and the
//! number-basis evaluator read this constant.

/// Vacuum quadrature variance.
pub const VACUUM_VARIANCE: f64 = 0.5;

/// Squeezing magnitude, in dB, that halves a quadrature variance (`10 log10 2`).
pub const FACTOR_TWO_DB: f64 = 3.010_299_956_639_812;

/// Default seed for every sampled computation.
pub const DEFAULT_SEED: u64 = 0x5eed_c0de_2024_0001;
