//! Cross-validation battery: closed forms against the moment engine and
//! Monte Carlo, the coherent-mixture bound, the local-squeezing bound,
//! reduction identities and the Fock-basis evaluator.
//!
//! Reports contain no timings, so identical configurations give identical text.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::closed_forms::{coherent_mean, coherent_variance, pure_variance};
use crate::constants::DEFAULT_SEED;
use crate::criteria::{ground_threshold, squeezed_threshold};
use crate::error::Result;
use crate::evaluate::{sampled_variance, variance_via, Route};
use crate::fock::{perturbative_moments, perturbative_nullifier_variance};
use crate::scenario::{Noise, Scenario, ScenarioSpec};
use crate::search::{linspace, scan_minimize};

/// Closed form against moment engine, relative to `max(1, |variance|)`.
pub const EXACT_TOL: f64 = 1e-12;
/// Monte Carlo agreement in standard errors.
pub const MC_SIGMAS: f64 = 5.0;
/// Allowed undercut of the ground threshold by a coherent mixture.
pub const MIXTURE_TOL: f64 = 1e-9;
/// Local-squeezing bound against numeric minimization over `r`.
pub const SQUEEZED_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfcheckConfig {
    pub seed: u64,
    /// Random scenarios for the exact comparisons.
    pub exact_tuples: usize,
    pub mc_tuples: usize,
    pub mc_samples: u64,
    pub mixtures: usize,
    pub lambdas_per_mixture: usize,
}

impl SelfcheckConfig {
    pub fn full(seed: u64) -> Self {
        Self {
            seed,
            exact_tuples: 1000,
            mc_tuples: 200,
            mc_samples: 1_000_000,
            mixtures: 10_000,
            lambdas_per_mixture: 20,
        }
    }

    pub fn quick(seed: u64) -> Self {
        Self {
            seed,
            exact_tuples: 100,
            mc_tuples: 20,
            mc_samples: 100_000,
            mixtures: 1000,
            lambdas_per_mixture: 20,
        }
    }
}

impl Default for SelfcheckConfig {
    fn default() -> Self {
        Self::full(DEFAULT_SEED)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        out.push_str(&format!("{} checks, {} failed\n", self.checks.len(), failed));
        out
    }
}

/// Parameter box for random scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRanges {
    pub kmax: usize,
    /// Bound on `|gamma|` and `|lambda|`.
    pub coupling: f64,
    /// Bound on `|r|`.
    pub squeezing: f64,
    /// Largest thermal or initial occupation.
    pub occupation: f64,
}

impl ParamRanges {
    /// Box for exact comparisons.
    pub const EXACT: Self = Self { kmax: 6, coupling: 5.0, squeezing: 1.0, occupation: 2.0 };
    /// Narrower box for sampling, where heavy tails at large couplings make
    /// the standard error itself noisy.
    pub const SAMPLED: Self = Self { kmax: 6, coupling: 2.0, squeezing: 0.6, occupation: 1.0 };
}

/// Random homogeneous hypergraph scenario with a closed form: ideal, lossy,
/// thermalised, or ideal with an initial occupation.
pub fn random_scenario<R: Rng>(rng: &mut R, ranges: &ParamRanges) -> ScenarioSpec {
    let k = rng.random_range(2..=ranges.kmax);
    let c = ranges.coupling;
    let gamma = rng.random_range(-c..=c);
    let lambda = rng.random_range(-c..=c);
    let r = rng.random_range(-ranges.squeezing..=ranges.squeezing);
    let occ = ranges.occupation;
    match rng.random_range(0..4) {
        0 => ScenarioSpec::homogeneous(k, gamma, lambda, r, Noise::Ideal),
        1 => ScenarioSpec::homogeneous(k, gamma, lambda, r, Noise::Loss { transmittivity: rng.random_range(0.0..=1.0) }),
        2 => ScenarioSpec::homogeneous(k, gamma, lambda, r, Noise::Thermal { nbar: rng.random_range(0.0..=occ) }),
        _ => ScenarioSpec::homogeneous(k, gamma, lambda, r, Noise::Ideal).with_n0(rng.random_range(0.0..=occ)),
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

pub fn closed_vs_moment(cfg: &SelfcheckConfig) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.exact_tuples {
        let s = Scenario::Hypergraph(random_scenario(&mut rng, &ParamRanges::EXACT));
        let a = variance_via(&s, Route::ClosedForm)?.value;
        let b = variance_via(&s, Route::MomentEngine)?.value;
        worst = worst.max((a - b).abs() / a.abs().max(1.0));
    }
    Ok(check(
        "closed-form-vs-moment-engine",
        worst <= EXACT_TOL,
        format!("{} tuples, max scaled |diff| {worst:.3e} (tol {EXACT_TOL:.0e})", cfg.exact_tuples),
    ))
}

fn mc_z_scores(cfg: &SelfcheckConfig, salt: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ salt);
    let jobs: Vec<(Scenario, u64)> = (0..cfg.mc_tuples)
        .map(|_| (Scenario::Hypergraph(random_scenario(&mut rng, &ParamRanges::SAMPLED)), rng.random()))
        .collect();
    jobs.par_iter()
        .map(|(s, seed)| -> Result<f64> {
            let exact = variance_via(s, Route::ClosedForm)?.value;
            let mc = sampled_variance(s, cfg.mc_samples, *seed)?;
            let se = mc.std_error.unwrap_or(0.0);
            Ok(if se > 0.0 { (mc.value - exact).abs() / se } else if mc.value == exact { 0.0 } else { f64::INFINITY })
        })
        .collect()
}

pub fn closed_vs_monte_carlo(cfg: &SelfcheckConfig) -> Result<CheckResult> {
    let z = mc_z_scores(cfg, 0x6d63)?;
    let worst = z.iter().copied().fold(0.0, f64::max);
    Ok(check(
        "closed-form-vs-monte-carlo",
        worst <= MC_SIGMAS,
        format!(
            "{} tuples x {} samples, max |z| {worst:.2} (tol {MC_SIGMAS})",
            cfg.mc_tuples, cfg.mc_samples
        ),
    ))
}

/// Coverage band in standard errors and the nominal coverage it should reach.
pub const COVERAGE_SIGMAS: f64 = 3.0;
pub const COVERAGE_TARGET: f64 = 0.99;

/// Largest miss count consistent with the target: the binomial mean plus
/// three binomial standard deviations.
pub fn coverage_allowance(n: usize) -> usize {
    let p = 1.0 - COVERAGE_TARGET;
    let n = n as f64;
    (n * p + 3.0 * (n * p * (1.0 - p)).sqrt()).floor() as usize
}

pub fn mc_coverage(cfg: &SelfcheckConfig) -> Result<CheckResult> {
    let z = mc_z_scores(cfg, 0x636f76)?;
    let misses = z.iter().filter(|&&z| z > COVERAGE_SIGMAS).count();
    let allowed = coverage_allowance(z.len());
    Ok(check(
        "monte-carlo-coverage",
        misses <= allowed,
        format!("{misses} of {} outside {COVERAGE_SIGMAS} SE (allowed {allowed})", z.len()),
    ))
}

/// Variance of nullifier `index` on a mixture of coherent states.
pub fn mixture_variance(k: usize, lambda: f64, weights: &[f64], alphas: &[Vec<Complex64>], index: usize) -> Result<f64> {
    let (mut second, mut mean) = (0.0, 0.0);
    for (w, a) in weights.iter().zip(alphas) {
        let m = coherent_mean(k, lambda, a, index)?;
        second += w * (coherent_variance(k, lambda, a, index)? + m * m);
        mean += w * m;
    }
    Ok(second - mean * mean)
}

pub fn coherent_mixture_bound(cfg: &SelfcheckConfig) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6d6978);
    let mut worst = f64::INFINITY;
    for _ in 0..cfg.mixtures {
        let k = rng.random_range(2..=4);
        let n = rng.random_range(1..=5);
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let alphas: Vec<Vec<Complex64>> = (0..n)
            .map(|_| (0..k).map(|_| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))).collect())
            .collect();
        let index = rng.random_range(1..=k);
        for _ in 0..cfg.lambdas_per_mixture {
            let l = rng.random_range(-3.0..3.0);
            let v = mixture_variance(k, l, &weights, &alphas, index)?;
            worst = worst.min(v - ground_threshold(k, l));
        }
    }
    Ok(check(
        "coherent-mixture-bound",
        worst >= -MIXTURE_TOL,
        format!(
            "{} mixtures x {} lambdas, min (variance - ground) {worst:.3e}",
            cfg.mixtures, cfg.lambdas_per_mixture
        ),
    ))
}

pub fn local_squeezing_bound() -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for k in 2..=6 {
        for l in linspace(0.1, 5.0, 50) {
            let m = scan_minimize(|r| Ok(pure_variance(k, 0.0, l, r)), -10.0, 10.0, 1e-12)?;
            worst = worst.max((m.value - squeezed_threshold(k, l)?.value).abs());
        }
    }
    let anchors = (squeezed_threshold(3, 1.0)?.value - 0.75).abs() <= 1e-12
        && (squeezed_threshold(4, 1.0)?.value - 0.6204).abs() <= 1e-4;
    Ok(check(
        "local-squeezing-bound",
        worst <= SQUEEZED_TOL && anchors,
        format!("k 2..6 x 50 lambdas, max |formula - numeric| {worst:.3e}"),
    ))
}

pub fn reduction_identities(cfg: &SelfcheckConfig) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x726564);
    let mut worst: f64 = 0.0;
    let me = |s: &ScenarioSpec| variance_via(&Scenario::Hypergraph(s.clone()), Route::MomentEngine).map(|v| v.value);
    for _ in 0..cfg.exact_tuples.min(200) {
        let mut s = random_scenario(&mut rng, &ParamRanges::EXACT);
        s.n0 = vec![0.0; s.k];
        let ideal = me(&ScenarioSpec { noise: Noise::Ideal, ..s.clone() })?;
        let lossless = me(&ScenarioSpec { noise: Noise::Loss { transmittivity: 1.0 }, ..s.clone() })?;
        let cold = me(&ScenarioSpec { noise: Noise::Thermal { nbar: 0.0 }, ..s.clone() })?;
        let vacuum = me(&ScenarioSpec { noise: Noise::Loss { transmittivity: 0.0 }, ..s.clone() })?;
        let r = s.r[0];
        let unentangled = me(&ScenarioSpec { gamma: 0.0, lambda: 0.0, noise: Noise::Ideal, ..s.clone() })?;
        for d in [
            ideal - lossless,
            ideal - cold,
            vacuum - ground_threshold(s.k, s.lambda),
            unentangled - (2.0 * r).exp() / 2.0,
        ] {
            worst = worst.max(d.abs());
        }
    }
    Ok(check(
        "reduction-identities",
        worst <= EXACT_TOL,
        format!("T=1, nbar=0, T=0 and gamma=0 limits, max |diff| {worst:.3e}"),
    ))
}

pub fn fock_consistency() -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for &(g, l) in &[(0.0, 1.0), (1.0, 0.0), (0.5, -1.5), (2.0, 0.7), (-1.3, 2.0)] {
        let base = perturbative_nullifier_variance(g, l, 4)?;
        for cutoff in [6, 8] {
            let m = perturbative_moments(g, l, cutoff)?;
            worst = worst.max((m.variance() - base).abs()).max(m.mean.norm()).max(m.second.im.abs());
        }
    }
    let vacuum = (perturbative_nullifier_variance(0.0, 1.0, 4)? - 0.75).abs();
    worst = worst.max(vacuum);
    Ok(check(
        "fock-cutoff-convergence",
        worst <= EXACT_TOL,
        format!("cutoffs 4, 6, 8; max deviation {worst:.3e}"),
    ))
}

/// Runs the whole battery. Errors inside a check are reported as failures.
pub fn run(cfg: &SelfcheckConfig) -> Report {
    let named: Vec<(&'static str, Result<CheckResult>)> = vec![
        ("closed-form-vs-moment-engine", closed_vs_moment(cfg)),
        ("closed-form-vs-monte-carlo", closed_vs_monte_carlo(cfg)),
        ("monte-carlo-coverage", mc_coverage(cfg)),
        ("coherent-mixture-bound", coherent_mixture_bound(cfg)),
        ("local-squeezing-bound", local_squeezing_bound()),
        ("reduction-identities", reduction_identities(cfg)),
        ("fock-cutoff-convergence", fock_consistency()),
    ];
    let checks = named
        .into_iter()
        .map(|(name, r)| r.unwrap_or_else(|e| check(name, false, format!("error: {e}"))))
        .collect();
    Report { checks }
}
