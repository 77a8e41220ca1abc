//! Seeded Monte Carlo (Wigner sampling) estimate of an expression's variance.
//!
//! Samples are split into fixed-size shards. Shard `s` draws from the ChaCha8
//! stream `s` of the seed, so results do not depend on how many worker
//! threads run the shards. Shard moments are merged in shard order with the
//! pairwise update formulas for central moments up to fourth order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::QuadExpr;

/// Samples per shard.
pub const SHARD_SIZE: u64 = 1 << 16;

pub const MIN_SAMPLES: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    /// Unbiased sample variance.
    pub estimate: f64,
    /// Asymptotic standard error of `estimate`, from the fourth central moment.
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Dense form of an expression for fast repeated evaluation.
struct Compiled {
    means: Vec<f64>,
    sds: Vec<f64>,
    terms: Vec<(f64, Vec<(usize, u32)>)>,
}

impl Compiled {
    fn new(expr: &QuadExpr) -> Self {
        let ids: Vec<_> = expr.env().keys().copied().collect();
        let index = |id| ids.binary_search(&id).expect("id in environment");
        let vars: Vec<_> = expr.env().values().collect();
        Self {
            means: vars.iter().map(|v| v.mean()).collect(),
            sds: vars.iter().map(|v| v.variance().sqrt()).collect(),
            terms: expr
                .terms()
                .iter()
                .map(|(m, c)| (*c, m.factors().iter().map(|(id, p)| (index(*id), *p)).collect()))
                .collect(),
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (c, factors) in &self.terms {
            let mut t = *c;
            for &(i, p) in factors {
                let xi = x[i];
                for _ in 0..p {
                    t *= xi;
                }
            }
            acc += t;
        }
        acc
    }
}

/// Count, mean and central moment sums `M2, M3, M4`.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for v in values {
            let d = v - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        Self { n, mean, m2, m3, m4 }
    }

    fn merge(self, b: Moments) -> Moments {
        let a = self;
        if a.n == 0.0 {
            return b;
        }
        let n = a.n + b.n;
        let d = b.mean - a.mean;
        let (d2, na, nb) = (d * d, a.n, b.n);
        let mean = a.mean + d * nb / n;
        let m2 = a.m2 + b.m2 + d2 * na * nb / n;
        let m3 = a.m3 + b.m3 + d2 * d * na * nb * (na - nb) / (n * n) + 3.0 * d * (na * b.m2 - nb * a.m2) / n;
        let m4 = a.m4
            + b.m4
            + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * b.m2 + nb * nb * a.m2) / (n * n)
            + 4.0 * d * (na * b.m3 - nb * a.m3) / n;
        Moments { n, mean, m2, m3, m4 }
    }
}

fn run_shard(compiled: &Compiled, seed: u64, shard: u64, count: usize) -> Moments {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    let mut x = vec![0.0; compiled.means.len()];
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        for (i, xi) in x.iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            *xi = compiled.means[i] + compiled.sds[i] * z;
        }
        values.push(compiled.eval(&x));
    }
    Moments::from_values(&values)
}

/// Estimates `Var(expr)` from `samples` independent draws of its variables.
/// Identical `(expr, samples, seed)` give bit-identical results.
pub fn mc_variance(expr: &QuadExpr, samples: u64, seed: u64) -> Result<McResult> {
    if samples < MIN_SAMPLES {
        return Err(Error::invalid("samples", format!("need at least {MIN_SAMPLES}, got {samples}")));
    }
    let compiled = Compiled::new(expr);
    let shards = samples.div_ceil(SHARD_SIZE);
    let parts: Vec<Moments> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let count = (samples - s * SHARD_SIZE).min(SHARD_SIZE) as usize;
            run_shard(&compiled, seed, s, count)
        })
        .collect();
    let total = parts
        .into_iter()
        .fold(Moments::default(), Moments::merge);
    let n = total.n;
    let estimate = total.m2 / (n - 1.0);
    let mu4 = total.m4 / n;
    let var_of_estimate = (mu4 - estimate * estimate * (n - 3.0) / (n - 1.0)) / n;
    Ok(McResult {
        estimate,
        std_error: var_of_estimate.max(0.0).sqrt(),
        samples,
        seed,
    })
}
