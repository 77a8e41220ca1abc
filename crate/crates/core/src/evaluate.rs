//! Variance evaluation with a choice of route: closed form, moment engine,
//! or Monte Carlo sampling.

use serde::{Deserialize, Serialize};

use crate::closed_forms::{self, LambdaQuadratic};
use crate::error::{Error, Result};
use crate::mc;
use crate::moments::{expr_covariance, expr_variance};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    MomentEngine,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::MomentEngine => "moment-engine",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceResult {
    pub value: f64,
    pub method: Method,
    /// Present for sampled estimates.
    pub std_error: Option<f64>,
}

/// Which exact route to use. `Auto` prefers the closed form when one applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Route {
    #[default]
    Auto,
    ClosedForm,
    MomentEngine,
}

pub fn variance(scenario: &Scenario) -> Result<VarianceResult> {
    variance_via(scenario, Route::Auto)
}

pub fn variance_via(scenario: &Scenario, route: Route) -> Result<VarianceResult> {
    scenario.validate()?;
    if route != Route::MomentEngine {
        if let Scenario::Hypergraph(spec) = scenario {
            if let Some(value) = closed_forms::closed_variance(spec)? {
                return Ok(VarianceResult { value, method: Method::ClosedForm, std_error: None });
            }
        }
        if route == Route::ClosedForm {
            return Err(Error::Unsupported("no closed form for this scenario".into()));
        }
    }
    let expr = scenario.nullifier_parts()?.assemble();
    Ok(VarianceResult {
        value: expr_variance(&expr)?,
        method: Method::MomentEngine,
        std_error: None,
    })
}

/// Monte Carlo estimate of the nullifier variance.
pub fn sampled_variance(scenario: &Scenario, samples: u64, seed: u64) -> Result<VarianceResult> {
    let expr = scenario.nullifier_parts()?.assemble();
    let r = mc::mc_variance(&expr, samples, seed)?;
    Ok(VarianceResult {
        value: r.estimate,
        method: Method::MonteCarlo,
        std_error: Some(r.std_error),
    })
}

/// Variance of the scenario's measured nullifier as an exact quadratic in `lambda`.
pub fn lambda_quadratic(scenario: &Scenario) -> Result<LambdaQuadratic> {
    lambda_quadratic_via(scenario, Route::Auto)
}

pub fn lambda_quadratic_via(scenario: &Scenario, route: Route) -> Result<LambdaQuadratic> {
    scenario.validate()?;
    if route != Route::MomentEngine {
        if let Scenario::Hypergraph(spec) = scenario {
            if let Some(q) = closed_forms::lambda_quadratic(spec)? {
                return Ok(q);
            }
        }
        if route == Route::ClosedForm {
            return Err(Error::Unsupported("no closed form for this scenario".into()));
        }
    }
    let parts = scenario.nullifier_parts()?;
    Ok(LambdaQuadratic {
        constant: expr_variance(&parts.base)?,
        linear: 2.0 * expr_covariance(&parts.base, &parts.probe)?,
        quadratic: expr_variance(&parts.probe)?,
    })
}

/// Lambda quadratics of every distinct nullifier. Homogeneous hypergraph
/// scenarios and phase states have one.
pub fn nullifier_quadratics(scenario: &Scenario) -> Result<Vec<LambdaQuadratic>> {
    (1..=scenario.nullifier_count())
        .map(|i| lambda_quadratic(&scenario.for_nullifier(i)))
        .collect()
}

/// Variances of every distinct nullifier at the scenario's lambda.
pub fn nullifier_variances(scenario: &Scenario) -> Result<Vec<f64>> {
    let lambda = scenario.lambda();
    Ok(nullifier_quadratics(scenario)?
        .iter()
        .map(|q| q.value(lambda))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Noise, ScenarioSpec, Squeeze};
    use approx::assert_abs_diff_eq;

    #[test]
    fn routes_agree_on_homogeneous_hypergraph() {
        for noise in [Noise::Ideal, Noise::Loss { transmittivity: 0.3 }, Noise::Thermal { nbar: 0.4 }] {
            let s = Scenario::hypergraph(4, 1.4, 0.6, Squeeze::Momentum(2.0), noise);
            let a = variance_via(&s, Route::ClosedForm).unwrap();
            let b = variance_via(&s, Route::MomentEngine).unwrap();
            assert_eq!(a.method, Method::ClosedForm);
            assert_eq!(b.method, Method::MomentEngine);
            assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-12);
            let qa = lambda_quadratic_via(&s, Route::ClosedForm).unwrap();
            let qb = lambda_quadratic_via(&s, Route::MomentEngine).unwrap();
            assert_abs_diff_eq!(qa.constant, qb.constant, epsilon = 1e-12);
            assert_abs_diff_eq!(qa.linear, qb.linear, epsilon = 1e-12);
            assert_abs_diff_eq!(qa.quadratic, qb.quadratic, epsilon = 1e-12);
        }
    }

    #[test]
    fn phase_states_use_the_moment_engine() {
        let s = Scenario::phase(3, 1.0, 1.0, Squeeze::None, Noise::Ideal);
        let v = variance(&s).unwrap();
        assert_eq!(v.method, Method::MomentEngine);
        assert!(variance_via(&s, Route::ClosedForm).is_err());
    }

    #[test]
    fn heterogeneous_squeezing_lists_every_nullifier() {
        let mut spec = ScenarioSpec::homogeneous(3, 1.0, 1.0, 0.0, Noise::Loss { transmittivity: 0.8 });
        spec.r = vec![-0.3, 0.0, 0.2];
        let s = Scenario::Hypergraph(spec.clone());
        let vs = nullifier_variances(&s).unwrap();
        assert_eq!(vs.len(), 3);
        for (i, v) in vs.iter().enumerate() {
            let direct = variance(&Scenario::Hypergraph(spec.clone().with_index(i + 1))).unwrap();
            assert_eq!(direct.method, Method::MomentEngine);
            assert_abs_diff_eq!(*v, direct.value, epsilon = 1e-12);
        }
        assert!(vs[0] != vs[2]);
    }
}
