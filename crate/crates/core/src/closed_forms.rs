//! Closed-form nullifier variances for homogeneous hypergraph states.
//!
//! These are the fast path for sweeps and depth searches, and the second
//! route checked against the scenario builder plus moment engine.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{Noise, ScenarioSpec};

fn check_transmittivity(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::invalid("transmittivity", format!("{t} outside [0, 1]")))
    }
}

fn check_occupation(name: &'static str, n: f64) -> Result<()> {
    if n.is_finite() && n >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{n} must be >= 0")))
    }
}

/// `e^{-2r(k-1)} / 2^{k-1}`, the variance of the product of the other
/// `k - 1` squeezed positions.
fn product_variance(k: usize, r: f64) -> f64 {
    let m = (k - 1) as f64;
    (-2.0 * r * m).exp() / 2f64.powf(m)
}

/// Pure squeezed hypergraph state.
pub fn pure_variance(k: usize, gamma: f64, lambda: f64, r: f64) -> f64 {
    (2.0 * r).exp() / 2.0 + (lambda - gamma).powi(2) * product_variance(k, r)
}

/// Every mode sent through a loss channel of transmittivity `t`.
pub fn loss_variance(k: usize, gamma: f64, lambda: f64, r: f64, t: f64) -> Result<f64> {
    check_transmittivity(t)?;
    let m = (k - 1) as i32;
    let momentum = (1.0 + t * ((2.0 * r).exp() - 1.0)) / 2.0;
    let position = (1.0 + t * ((-2.0 * r).exp() - 1.0)) / 2.0;
    let cross = product_variance(k, r) * gamma * (t * gamma - 2.0 * lambda * t.powf(k as f64 / 2.0));
    Ok(momentum + lambda * lambda * position.powi(m) + cross)
}

/// Every quadrature receives additive Gaussian noise of variance `nbar`.
pub fn thermal_variance(k: usize, gamma: f64, lambda: f64, r: f64, nbar: f64) -> Result<f64> {
    check_occupation("nbar", nbar)?;
    let m = (k - 1) as i32;
    Ok((2.0 * r).exp() / 2.0
        + nbar
        + lambda * lambda * (nbar + (-2.0 * r).exp() / 2.0).powi(m)
        + product_variance(k, r) * gamma * (gamma - 2.0 * lambda))
}

/// Squeezed thermal inputs of occupation `n0`, no channel.
pub fn initial_thermal_variance(k: usize, gamma: f64, lambda: f64, r: f64, n0: f64) -> Result<f64> {
    check_occupation("n0", n0)?;
    let f = 1.0 + 2.0 * n0;
    Ok(f * (2.0 * r).exp() / 2.0
        + (gamma - lambda).powi(2) * product_variance(k, r) * f.powi((k - 1) as i32))
}

/// Nullifier `index` (one-based) evaluated on the coherent state `|alpha_1 ... alpha_k>`.
pub fn coherent_variance(k: usize, lambda: f64, alphas: &[Complex64], index: usize) -> Result<f64> {
    if alphas.len() != k {
        return Err(Error::LengthMismatch { expected: k, got: alphas.len() });
    }
    if !(1..=k).contains(&index) {
        return Err(Error::invalid("index", format!("{index} outside 1..={k}")));
    }
    let others = alphas
        .iter()
        .enumerate()
        .filter(|(j, _)| *j + 1 != index)
        .map(|(_, a)| 2.0 * a.re * a.re);
    let (with_vacuum, displaced) = others.fold((1.0, 1.0), |(a, b), d| (a * (0.5 + d), b * d));
    Ok(0.5 + lambda * lambda * (with_vacuum - displaced))
}

/// Mean of nullifier `index` on the coherent state `|alpha_1 ... alpha_k>`,
/// with `<q> = √2 Re(alpha)` and `<p> = √2 Im(alpha)`.
pub fn coherent_mean(k: usize, lambda: f64, alphas: &[Complex64], index: usize) -> Result<f64> {
    if alphas.len() != k {
        return Err(Error::LengthMismatch { expected: k, got: alphas.len() });
    }
    if !(1..=k).contains(&index) {
        return Err(Error::invalid("index", format!("{index} outside 1..={k}")));
    }
    let s2 = std::f64::consts::SQRT_2;
    let product: f64 = alphas
        .iter()
        .enumerate()
        .filter(|(j, _)| *j + 1 != index)
        .map(|(_, a)| s2 * a.re)
        .product();
    Ok(s2 * alphas[index - 1].im + lambda * product)
}

/// Variance as a quadratic in the hypergraphicity:
/// `constant + linear * lambda + quadratic * lambda^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaQuadratic {
    pub constant: f64,
    pub linear: f64,
    pub quadratic: f64,
}

impl LambdaQuadratic {
    pub fn value(&self, lambda: f64) -> f64 {
        self.constant + lambda * (self.linear + lambda * self.quadratic)
    }

    /// Minimizing `lambda`, `-linear / (2 quadratic)`.
    pub fn argmin(&self) -> Result<f64> {
        if !(self.quadratic > 0.0) {
            return Err(Error::Degenerate(format!(
                "lambda^2 coefficient {} is not positive",
                self.quadratic
            )));
        }
        Ok(-self.linear / (2.0 * self.quadratic))
    }

    pub fn min_value(&self) -> Result<f64> {
        let l = self.argmin()?;
        Ok(self.value(l))
    }
}

/// Closed-form lambda coefficients, when the scenario has one: homogeneous
/// squeezing, and initial occupation only without a channel.
pub fn lambda_quadratic(spec: &ScenarioSpec) -> Result<Option<LambdaQuadratic>> {
    spec.validate()?;
    let Some((r, n0)) = spec.homogeneous_params() else {
        return Ok(None);
    };
    let (k, g) = (spec.k, spec.gamma);
    let m = (k - 1) as i32;
    let c = product_variance(k, r);
    let q = match spec.noise {
        Noise::Ideal => {
            let f = 1.0 + 2.0 * n0;
            let cf = c * f.powi(m);
            LambdaQuadratic {
                constant: f * (2.0 * r).exp() / 2.0 + cf * g * g,
                linear: -2.0 * cf * g,
                quadratic: cf,
            }
        }
        _ if n0 != 0.0 => return Ok(None),
        Noise::Loss { transmittivity: t } => LambdaQuadratic {
            constant: (1.0 + t * ((2.0 * r).exp() - 1.0)) / 2.0 + c * g * g * t,
            linear: -2.0 * c * g * t.powf(k as f64 / 2.0),
            quadratic: ((1.0 + t * ((-2.0 * r).exp() - 1.0)) / 2.0).powi(m),
        },
        Noise::Thermal { nbar } => LambdaQuadratic {
            constant: (2.0 * r).exp() / 2.0 + nbar + c * g * g,
            linear: -2.0 * c * g,
            quadratic: (nbar + (-2.0 * r).exp() / 2.0).powi(m),
        },
    };
    Ok(Some(q))
}

/// Closed-form variance of the scenario's nullifier, when one exists.
pub fn closed_variance(spec: &ScenarioSpec) -> Result<Option<f64>> {
    spec.validate()?;
    let Some((r, n0)) = spec.homogeneous_params() else {
        return Ok(None);
    };
    let (k, g, l) = (spec.k, spec.gamma, spec.lambda);
    let v = match spec.noise {
        Noise::Ideal if n0 == 0.0 => pure_variance(k, g, l, r),
        Noise::Ideal => initial_thermal_variance(k, g, l, r, n0)?,
        _ if n0 != 0.0 => return Ok(None),
        Noise::Loss { transmittivity } => loss_variance(k, g, l, r, transmittivity)?,
        Noise::Thermal { nbar } => thermal_variance(k, g, l, r, nbar)?,
    };
    Ok(Some(v))
}
