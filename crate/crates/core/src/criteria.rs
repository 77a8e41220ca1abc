//! Nonclassicality thresholds and classification.
//!
//! * The ground threshold `1/2 + lambda^2 / 2^(k-1)` bounds every mixture of
//!   coherent states; a single nullifier below it proves nonclassicality.
//! * The local-squeezed threshold is the smallest nullifier variance any
//!   product of squeezed vacua reaches. All `k` nullifiers below it, at one
//!   common `lambda`, is hypergraph nonclassicality.
//!
//! Since the vacuum is one of the squeezed states, the local-squeezed
//! threshold never exceeds the ground threshold.

use serde::{Deserialize, Serialize};

use crate::constants::VACUUM_VARIANCE;
use crate::error::{Error, Result};
use crate::evaluate::{nullifier_quadratics, nullifier_variances};
use crate::moments::gaussian_moment;
use crate::scenario::Scenario;
use crate::search::{scan_maximize, scan_minimize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdPolicy {
    Ground,
    LocalSqueezed,
}

impl ThresholdPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            ThresholdPolicy::Ground => "ground",
            ThresholdPolicy::LocalSqueezed => "local-squeezed",
        }
    }
}

/// A threshold value. `degenerate` marks `lambda = 0`, where the squeezed
/// bound collapses to an unattainable infimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub value: f64,
    pub degenerate: bool,
}

pub fn ground_threshold(k: usize, lambda: f64) -> f64 {
    0.5 + lambda * lambda / 2f64.powi(k as i32 - 1)
}

/// Minimum over `r` of the pure squeezed-vacuum nullifier variance,
/// `4^((1-k)/k) (k-1)^((1-k)/k) k |lambda|^(2/k)`.
pub fn squeezed_threshold(k: usize, lambda: f64) -> Result<Threshold> {
    if k < 2 {
        return Err(Error::invalid("k", format!("need k >= 2, got {k}")));
    }
    let kf = k as f64;
    let e = (1.0 - kf) / kf;
    Ok(Threshold {
        value: 4f64.powf(e) * (kf - 1.0).powf(e) * kf * lambda.abs().powf(2.0 / kf),
        degenerate: lambda == 0.0,
    })
}

/// `Var(x^m)` for `x ~ Normal(0, variance)`.
pub fn gaussian_power_variance(m: u32, variance: f64) -> Result<f64> {
    Ok(gaussian_moment(2 * m, 0.0, variance)? - gaussian_moment(m, 0.0, variance)?.powi(2))
}

fn single_mode_squeezed_variance(k: usize, lambda: f64, r: f64) -> Result<f64> {
    let kf = k as f64;
    let pv = gaussian_power_variance((k - 1) as u32, (-2.0 * r).exp() * VACUUM_VARIANCE)?;
    Ok((2.0 * r).exp() * VACUUM_VARIANCE + kf * kf * lambda * lambda * pv)
}

/// Vacuum value of `Var(p + k lambda q^(k-1))`, the single-mode reference line.
pub fn single_mode_vacuum_threshold(k: usize, lambda: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::invalid("k", format!("need k >= 2, got {k}")));
    }
    single_mode_squeezed_variance(k, lambda, 0.0)
}

/// Smallest `Var(p + k lambda q^(k-1))` over squeezed vacua, by bounded
/// minimization over `r`.
pub fn single_mode_squeezed_threshold(k: usize, lambda: f64) -> Result<Threshold> {
    if k < 2 {
        return Err(Error::invalid("k", format!("need k >= 2, got {k}")));
    }
    if lambda == 0.0 {
        // infimum e^{2r}/2 -> 0 as r -> -inf
        return Ok(Threshold { value: 0.0, degenerate: true });
    }
    let m = scan_minimize(|r| single_mode_squeezed_variance(k, lambda, r), -15.0, 15.0, 1e-11)?;
    Ok(Threshold { value: m.value, degenerate: false })
}

/// Threshold of the given policy for the scenario's state family.
pub fn threshold(scenario: &Scenario, policy: ThresholdPolicy, lambda: f64) -> Result<Threshold> {
    let k = scenario.k();
    match (scenario, policy) {
        (Scenario::Hypergraph(_), ThresholdPolicy::Ground) => Ok(Threshold {
            value: ground_threshold(k, lambda),
            degenerate: false,
        }),
        (Scenario::Hypergraph(_), ThresholdPolicy::LocalSqueezed) => squeezed_threshold(k, lambda),
        (Scenario::Phase(_), ThresholdPolicy::Ground) => Ok(Threshold {
            value: single_mode_vacuum_threshold(k, lambda)?,
            degenerate: false,
        }),
        (Scenario::Phase(_), ThresholdPolicy::LocalSqueezed) => single_mode_squeezed_threshold(k, lambda),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonclassicalityClass {
    ClassicalCompatible,
    Nonclassical,
    HypergraphNonclassical,
}

impl NonclassicalityClass {
    pub fn as_str(self) -> &'static str {
        match self {
            NonclassicalityClass::ClassicalCompatible => "ClassicalCompatible",
            NonclassicalityClass::Nonclassical => "Nonclassical",
            NonclassicalityClass::HypergraphNonclassical => "HypergraphNonclassical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: NonclassicalityClass,
    /// `min_i (threshold - variance_i)` for the chosen policy; positive passes.
    pub margin: f64,
    pub degenerate: bool,
}

/// Classifies the `k` nullifier variances of one state at a common `lambda`.
///
/// Hypergraph nonclassical when every variance is below the local-squeezed
/// threshold; nonclassical when any variance is below the ground threshold.
pub fn classify(variances: &[f64], k: usize, lambda: f64, policy: ThresholdPolicy) -> Result<Classification> {
    if variances.len() != k {
        return Err(Error::LengthMismatch { expected: k, got: variances.len() });
    }
    let ground = ground_threshold(k, lambda);
    let squeezed = squeezed_threshold(k, lambda)?;
    let class = if variances.iter().all(|v| *v < squeezed.value) {
        NonclassicalityClass::HypergraphNonclassical
    } else if variances.iter().any(|v| *v < ground) {
        NonclassicalityClass::Nonclassical
    } else {
        NonclassicalityClass::ClassicalCompatible
    };
    let t = match policy {
        ThresholdPolicy::Ground => ground,
        ThresholdPolicy::LocalSqueezed => squeezed.value,
    };
    let margin = variances
        .iter()
        .map(|v| t - v)
        .fold(f64::INFINITY, f64::min);
    Ok(Classification { class, margin, degenerate: squeezed.degenerate })
}

/// [`classify`] applied to all `k` nullifiers of a hypergraph scenario at its own lambda.
pub fn classify_scenario(scenario: &Scenario, policy: ThresholdPolicy) -> Result<Classification> {
    if let Scenario::Phase(_) = scenario {
        return Err(Error::Unsupported("classification is defined for hypergraph states".into()));
    }
    let k = scenario.k();
    let mut variances = nullifier_variances(scenario)?;
    if variances.len() == 1 {
        variances = vec![variances[0]; k];
    }
    classify(&variances, k, scenario.lambda(), policy)
}

/// The `lambda` minimizing the measured nullifier's variance: the vertex of
/// its exact quadratic in `lambda`. The scenario's own `lambda` is ignored.
pub fn effective_hypergraphicity(scenario: &Scenario) -> Result<f64> {
    crate::evaluate::lambda_quadratic(scenario)?.argmin()
}

/// `threshold(lambda) - max_i Var(N_i)` at the given lambda: positive when
/// every nullifier passes.
pub fn criterion_margin(scenario: &Scenario, policy: ThresholdPolicy, lambda: f64) -> Result<f64> {
    let quads = nullifier_quadratics(scenario)?;
    margin_from_quadratics(scenario, &quads, policy, lambda)
}

pub(crate) fn margin_from_quadratics(
    scenario: &Scenario,
    quads: &[crate::closed_forms::LambdaQuadratic],
    policy: ThresholdPolicy,
    lambda: f64,
) -> Result<f64> {
    let t = threshold(scenario, policy, lambda)?.value;
    let worst = quads
        .iter()
        .map(|q| q.value(lambda))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(t - worst)
}

/// Common `lambda` maximizing the minimum margin across nullifiers, searched
/// on `bracket` and never worse than `lambda = gamma` or the variance minimizer.
pub fn best_common_lambda(
    scenario: &Scenario,
    policy: ThresholdPolicy,
    bracket: (f64, f64),
) -> Result<(f64, f64)> {
    let quads = nullifier_quadratics(scenario)?;
    best_lambda_from_quadratics(scenario, &quads, policy, bracket)
}

pub(crate) fn best_lambda_from_quadratics(
    scenario: &Scenario,
    quads: &[crate::closed_forms::LambdaQuadratic],
    policy: ThresholdPolicy,
    bracket: (f64, f64),
) -> Result<(f64, f64)> {
    let margin = |l: f64| margin_from_quadratics(scenario, quads, policy, l);
    let found = scan_maximize(margin, bracket.0, bracket.1, 1e-10)?;
    let mut best = (found.x, found.value);
    let mut candidates = vec![scenario.gamma()];
    if let Some(l) = quads.first().and_then(|q| q.argmin().ok()) {
        candidates.push(l);
    }
    for l in candidates {
        let m = margin(l)?;
        if m > best.1 {
            best = (l, m);
        }
    }
    Ok(best)
}

/// Default lambda search bracket for a scenario: wide enough to contain the
/// margin maximum in the regimes studied here.
pub fn default_lambda_bracket(scenario: &Scenario) -> (f64, f64) {
    let half = (4.0 * scenario.gamma().abs()).max(4.0);
    (-half, half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Noise, Squeeze};
    use approx::assert_abs_diff_eq;

    #[test]
    fn ground_threshold_examples() {
        assert_eq!(ground_threshold(3, 1.0), 0.75);
        assert_eq!(ground_threshold(5, 0.0), 0.5);
        assert_eq!(ground_threshold(2, 1.0), 1.0);
    }

    #[test]
    fn squeezed_threshold_examples() {
        assert_abs_diff_eq!(squeezed_threshold(3, 1.0).unwrap().value, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(squeezed_threshold(2, 1.0).unwrap().value, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            squeezed_threshold(4, 1.0).unwrap().value,
            4.0 * 12f64.powf(-0.75),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(squeezed_threshold(4, 1.0).unwrap().value, 0.6204, epsilon = 1e-4);
        let zero = squeezed_threshold(3, 0.0).unwrap();
        assert!(zero.degenerate);
        assert_eq!(zero.value, 0.0);
        assert!(squeezed_threshold(1, 1.0).is_err());
    }

    #[test]
    fn squeezed_threshold_matches_grid_minimum() {
        // grid oracle on e^{2r}/2 + lambda^2 e^{-2r(k-1)} / 2^{k-1}
        for k in 2..=5usize {
            for &lambda in &[0.2, 1.0, 3.0] {
                let f = |r: f64| {
                    (2.0 * r).exp() / 2.0
                        + lambda * lambda * (-2.0 * r * (k - 1) as f64).exp() / 2f64.powi(k as i32 - 1)
                };
                let grid_min = (0..=400_000)
                    .map(|i| -4.0 + 8.0 * i as f64 / 400_000.0)
                    .map(f)
                    .fold(f64::INFINITY, f64::min);
                let t = squeezed_threshold(k, lambda).unwrap().value;
                assert!(t <= grid_min + 1e-12);
                assert_abs_diff_eq!(t, grid_min, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn single_mode_threshold_examples() {
        for &l in &[0.3, 1.0, -2.0] {
            assert_abs_diff_eq!(single_mode_squeezed_threshold(2, l).unwrap().value, 2.0 * l.abs(), epsilon = 1e-10);
        }
        let zero = single_mode_squeezed_threshold(3, 0.0).unwrap();
        assert!(zero.degenerate);
        assert_eq!(zero.value, 0.0);

        // grid oracle over r in [-5, 5]
        let f = |r: f64| {
            let s2 = (-2.0 * r).exp() / 2.0;
            (2.0 * r).exp() / 2.0 + 9.0 * 2.0 * s2 * s2
        };
        let n = 2_000_000;
        let grid = (0..=n)
            .map(|i| -5.0 + 10.0 * i as f64 / n as f64)
            .map(f)
            .fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(single_mode_squeezed_threshold(3, 1.0).unwrap().value, grid, epsilon = 1e-9);
        // analytic: minimum of x/2 + 18/(4x^2) is at x^3 = 18
        let x = 18f64.powf(1.0 / 3.0);
        assert_abs_diff_eq!(
            single_mode_squeezed_threshold(3, 1.0).unwrap().value,
            x / 2.0 + 18.0 / (4.0 * x * x),
            epsilon = 1e-12
        );
    }

    #[test]
    fn squeezed_never_exceeds_ground() {
        for k in 2..=6 {
            for i in 1..=500 {
                let l = 0.01 * i as f64;
                assert!(squeezed_threshold(k, l).unwrap().value <= ground_threshold(k, l) + 1e-15);
            }
        }
    }

    #[test]
    fn classify_examples() {
        let c = classify(&[0.5, 0.5, 0.5], 3, 1.0, ThresholdPolicy::LocalSqueezed).unwrap();
        assert_eq!(c.class, NonclassicalityClass::HypergraphNonclassical);
        assert_abs_diff_eq!(c.margin, 0.25, epsilon = 1e-15);
        let c = classify(&[0.5, 0.5, 0.8], 3, 1.0, ThresholdPolicy::Ground).unwrap();
        assert_eq!(c.class, NonclassicalityClass::Nonclassical);
        let c = classify(&[0.5, 0.5, 0.5], 3, 0.0, ThresholdPolicy::Ground).unwrap();
        assert_eq!(c.class, NonclassicalityClass::ClassicalCompatible);
        assert!(c.degenerate);
        assert!(matches!(
            classify(&[0.5, 0.5], 3, 1.0, ThresholdPolicy::Ground),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn effective_hypergraphicity_examples() {
        let s = Scenario::hypergraph(3, 1.7, 0.0, Squeeze::Momentum(3.0), Noise::Ideal);
        assert_abs_diff_eq!(effective_hypergraphicity(&s).unwrap(), 1.7, epsilon = 1e-14);
        let s = Scenario::hypergraph(3, 0.0, 0.5, Squeeze::None, Noise::Thermal { nbar: 0.2 });
        assert_eq!(effective_hypergraphicity(&s).unwrap(), 0.0);
        let r = -std::f64::consts::LN_2 / 2.0;
        let s = Scenario::Hypergraph(crate::scenario::ScenarioSpec::homogeneous(
            3, 1.0, 0.0, r, Noise::Loss { transmittivity: 0.46 },
        ));
        let l = effective_hypergraphicity(&s).unwrap();
        assert_abs_diff_eq!(l, 0.46f64.powf(1.5) / (0.73f64).powi(2), epsilon = 1e-14);
        // numeric parabola minimization
        let m = crate::search::scan_minimize(
            |x| crate::evaluate::variance(&s.with_lambda(x)).map(|v| v.value),
            -3.0,
            3.0,
            1e-11,
        )
        .unwrap();
        assert_abs_diff_eq!(l, m.x, epsilon = 1e-8);
    }

    #[test]
    fn best_common_lambda_is_at_least_gamma() {
        let s = Scenario::hypergraph(3, 1.0, 1.0, Squeeze::Momentum(3.0), Noise::Loss { transmittivity: 0.6 });
        let at_gamma = criterion_margin(&s, ThresholdPolicy::LocalSqueezed, 1.0).unwrap();
        let (_, best) = best_common_lambda(&s, ThresholdPolicy::LocalSqueezed, default_lambda_bracket(&s)).unwrap();
        assert!(best >= at_gamma);
    }
}
