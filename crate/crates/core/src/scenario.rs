//! Heisenberg-picture construction of nullifier expressions.
//!
//! # Squeezing sign convention
//!
//! A mode prepared with squeezing parameter `r` has `Var(p) = e^{2r}/2` and
//! `Var(q) = e^{-2r}/2`. **Momentum squeezing therefore means `r < 0`** and
//! position squeezing `r > 0`. [`squeeze_param`] converts dB magnitudes
//! accordingly.
//!
//! # Construction
//!
//! For the k-mode hypergraph state and nullifier index `i`:
//!
//! 1. input quadratures are independent Gaussians with
//!    `Var(p_i) = (1 + 2 n0) e^{2r} / 2` and `Var(q_j) = (1 + 2 n0) e^{-2r} / 2`;
//! 2. the interaction shifts `p_i -> p_i - gamma * prod_{j != i} q_j`;
//! 3. the channel acts on every quadrature: loss maps
//!    `x -> sqrt(T) x + sqrt(1 - T) v` with `v` a fresh vacuum variable,
//!    thermalisation adds a fresh variable of variance `nbar`;
//! 4. the measured combination is `p_i' + lambda * prod_{j != i} q_j'`.
//!
//! The unitary acts before the channel. With this sign choice the pure-state
//! variance depends on `(lambda - gamma)^2`, so `lambda = gamma` is the
//! pure-state optimum.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constants::VACUUM_VARIANCE;
use crate::error::{Error, Result};
use crate::moments::{QuadExpr, VarAllocator};

/// Noise channel applied identically to every mode after the interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Noise {
    Ideal,
    Loss { transmittivity: f64 },
    Thermal { nbar: f64 },
}

impl Noise {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Noise::Ideal => Ok(()),
            Noise::Loss { transmittivity: t } => {
                if !(0.0..=1.0).contains(&t) {
                    return Err(Error::invalid("noise", format!("transmittivity {t} outside [0, 1]")));
                }
                Ok(())
            }
            Noise::Thermal { nbar } => {
                if !nbar.is_finite() || nbar < 0.0 {
                    return Err(Error::invalid("noise", format!("occupation {nbar} must be >= 0")));
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Noise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Noise::Ideal => write!(f, "ideal"),
            Noise::Loss { transmittivity } => write!(f, "loss:{transmittivity}"),
            Noise::Thermal { nbar } => write!(f, "thermal:{nbar}"),
        }
    }
}

impl FromStr for Noise {
    type Err = Error;

    /// Parses `ideal`, `loss:<T>` or `thermal:<nbar>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("ideal") {
            return Ok(Noise::Ideal);
        }
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid("noise", format!("expected ideal | loss:<T> | thermal:<nbar>, got `{s}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::invalid("noise", format!("`{value}` is not a number")))?;
        let noise = match kind.trim().to_ascii_lowercase().as_str() {
            "loss" => Noise::Loss { transmittivity: value },
            "thermal" | "thermalisation" | "thermalization" => Noise::Thermal { nbar: value },
            other => return Err(Error::invalid("noise", format!("unknown channel `{other}`"))),
        };
        noise.validate()?;
        Ok(noise)
    }
}

/// Local Gaussian squeezing of the inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "value", rename_all = "snake_case")]
pub enum Squeeze {
    None,
    /// Momentum squeezing by the given dB (`r < 0`).
    Momentum(f64),
    /// Position squeezing by the given dB (`r > 0`).
    Position(f64),
    /// Raw squeezing parameter.
    Raw(f64),
}

/// Signed squeezing parameter `r` for a squeezing setting.
pub fn squeeze_param(axis: Squeeze) -> f64 {
    let db_to_r = |db: f64| db / 20.0 * std::f64::consts::LN_10;
    match axis {
        Squeeze::None => 0.0,
        Squeeze::Momentum(db) => -db_to_r(db),
        Squeeze::Position(db) => db_to_r(db),
        Squeeze::Raw(r) => r,
    }
}

impl Squeeze {
    pub fn r(self) -> f64 {
        squeeze_param(self)
    }

    pub fn validate(self) -> Result<()> {
        match self {
            Squeeze::Momentum(db) | Squeeze::Position(db) if !(db.is_finite() && db >= 0.0) => {
                Err(Error::invalid("squeeze", format!("magnitude {db} dB must be >= 0")))
            }
            Squeeze::Raw(r) if !r.is_finite() => Err(Error::invalid("squeeze", "r must be finite")),
            _ => Ok(()),
        }
    }

    /// Short label used in table columns.
    pub fn label(self) -> &'static str {
        match self {
            Squeeze::None => "none",
            Squeeze::Momentum(_) => "momentum",
            Squeeze::Position(_) => "position",
            Squeeze::Raw(_) => "raw",
        }
    }
}

impl fmt::Display for Squeeze {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Squeeze::None => write!(f, "none"),
            Squeeze::Momentum(db) => write!(f, "momentum:{db}dB"),
            Squeeze::Position(db) => write!(f, "position:{db}dB"),
            Squeeze::Raw(r) => write!(f, "r:{r}"),
        }
    }
}

impl FromStr for Squeeze {
    type Err = Error;

    /// Parses `momentum:<x>dB | position:<x>dB | r:<float> | none`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("none") {
            return Ok(Squeeze::None);
        }
        let (axis, value) = s.split_once(':').ok_or_else(|| {
            Error::invalid("squeeze", format!("expected momentum:<x>dB | position:<x>dB | r:<float> | none, got `{s}`"))
        })?;
        let axis = axis.trim().to_ascii_lowercase();
        let value = value.trim();
        let number = |text: &str| -> Result<f64> {
            text.trim()
                .parse()
                .map_err(|_| Error::invalid("squeeze", format!("`{text}` is not a number")))
        };
        let out = match axis.as_str() {
            "r" => Squeeze::Raw(number(value)?),
            "momentum" | "position" => {
                let lower = value.to_ascii_lowercase();
                let db = number(lower.strip_suffix("db").unwrap_or(&lower))?;
                if axis == "momentum" {
                    Squeeze::Momentum(db)
                } else {
                    Squeeze::Position(db)
                }
            }
            other => return Err(Error::invalid("squeeze", format!("unknown axis `{other}`"))),
        };
        out.validate()?;
        Ok(out)
    }
}

/// Physical hypergraph state, noise channel and measured nullifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    /// Number of modes (uniformity of the hyperedge).
    pub k: usize,
    pub gamma: f64,
    pub lambda: f64,
    /// Squeezing parameter per mode.
    pub r: Vec<f64>,
    /// Initial thermal occupation per mode.
    pub n0: Vec<f64>,
    pub noise: Noise,
    /// One-based index of the measured nullifier.
    pub nullifier_index: usize,
}

impl ScenarioSpec {
    /// Equal squeezing and no initial thermal noise on all modes; nullifier 1.
    pub fn homogeneous(k: usize, gamma: f64, lambda: f64, r: f64, noise: Noise) -> Self {
        Self {
            k,
            gamma,
            lambda,
            r: vec![r; k],
            n0: vec![0.0; k],
            noise,
            nullifier_index: 1,
        }
    }

    pub fn with_n0(mut self, n0: f64) -> Self {
        self.n0 = vec![n0; self.k];
        self
    }

    pub fn with_index(mut self, index: usize) -> Self {
        self.nullifier_index = index;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::invalid("k", format!("need at least 2 modes, got {}", self.k)));
        }
        if self.r.len() != self.k {
            return Err(Error::LengthMismatch { expected: self.k, got: self.r.len() });
        }
        if self.n0.len() != self.k {
            return Err(Error::LengthMismatch { expected: self.k, got: self.n0.len() });
        }
        if !self.gamma.is_finite() {
            return Err(Error::invalid("gamma", "must be finite"));
        }
        if !self.lambda.is_finite() {
            return Err(Error::invalid("lambda", "must be finite"));
        }
        if self.r.iter().any(|r| !r.is_finite()) {
            return Err(Error::invalid("squeeze", "r must be finite"));
        }
        if self.n0.iter().any(|n| !n.is_finite() || *n < 0.0) {
            return Err(Error::invalid("n0", "initial occupation must be >= 0"));
        }
        if !(1..=self.k).contains(&self.nullifier_index) {
            return Err(Error::invalid(
                "index",
                format!("nullifier index {} outside 1..={}", self.nullifier_index, self.k),
            ));
        }
        self.noise.validate()
    }

    /// Common squeezing and occupation if all modes agree.
    pub fn homogeneous_params(&self) -> Option<(f64, f64)> {
        let r = *self.r.first()?;
        let n0 = *self.n0.first()?;
        let same = self.r.iter().all(|x| *x == r) && self.n0.iter().all(|x| *x == n0);
        same.then_some((r, n0))
    }
}

/// Single-mode nonlinear phase state `exp(i gamma q^k)|r>` measured through
/// `p + k lambda q^(k-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpec {
    pub k: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub r: f64,
    pub noise: Noise,
}

impl PhaseSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::invalid("k", format!("phase states need k >= 2, got {}", self.k)));
        }
        if !(self.gamma.is_finite() && self.lambda.is_finite() && self.r.is_finite()) {
            return Err(Error::invalid("gamma", "parameters must be finite"));
        }
        self.noise.validate()
    }
}

/// A nullifier split as `base + lambda * probe`, the shape every measured
/// combination takes. The variance is then an exact quadratic in `lambda`.
#[derive(Debug, Clone)]
pub struct NullifierParts {
    pub base: QuadExpr,
    pub probe: QuadExpr,
    pub lambda: f64,
}

impl NullifierParts {
    pub fn assemble(&self) -> QuadExpr {
        &self.base + &self.probe.scale(self.lambda)
    }
}

struct Channel<'a> {
    noise: Noise,
    alloc: &'a mut VarAllocator,
}

impl Channel<'_> {
    fn apply(&mut self, x: &QuadExpr) -> Result<QuadExpr> {
        match self.noise {
            Noise::Ideal => Ok(x.clone()),
            Noise::Loss { transmittivity: t } => {
                let v = QuadExpr::var(&self.alloc.fresh(0.0, VACUUM_VARIANCE)?);
                Ok(&x.scale(t.sqrt()) + &v.scale((1.0 - t).sqrt()))
            }
            Noise::Thermal { nbar } => {
                let w = QuadExpr::var(&self.alloc.fresh(0.0, nbar)?);
                Ok(x + &w)
            }
        }
    }
}

/// Nullifier of the (possibly noisy) hypergraph state, split in `lambda`.
pub fn hypergraph_nullifier_parts(spec: &ScenarioSpec) -> Result<NullifierParts> {
    spec.validate()?;
    let mut alloc = VarAllocator::new();
    let i = spec.nullifier_index - 1;
    let thermal_factor = |j: usize| 1.0 + 2.0 * spec.n0[j];
    let p_in = QuadExpr::var(&alloc.fresh(
        0.0,
        thermal_factor(i) * (2.0 * spec.r[i]).exp() * VACUUM_VARIANCE,
    )?);
    let mut q_in = Vec::with_capacity(spec.k - 1);
    for j in (0..spec.k).filter(|&j| j != i) {
        q_in.push(QuadExpr::var(&alloc.fresh(
            0.0,
            thermal_factor(j) * (-2.0 * spec.r[j]).exp() * VACUUM_VARIANCE,
        )?));
    }
    let p_out = &p_in - &QuadExpr::product(&q_in).scale(spec.gamma);

    let mut channel = Channel { noise: spec.noise, alloc: &mut alloc };
    let base = channel.apply(&p_out)?;
    let q_noisy = q_in
        .iter()
        .map(|q| channel.apply(q))
        .collect::<Result<Vec<_>>>()?;
    Ok(NullifierParts {
        base,
        probe: QuadExpr::product(&q_noisy),
        lambda: spec.lambda,
    })
}

pub fn build_hypergraph_nullifier(spec: &ScenarioSpec) -> Result<QuadExpr> {
    Ok(hypergraph_nullifier_parts(spec)?.assemble())
}

/// Nullifier `p' + k lambda q'^(k-1)` of the single-mode phase state, split in `lambda`.
pub fn phase_nullifier_parts(spec: &PhaseSpec) -> Result<NullifierParts> {
    spec.validate()?;
    let mut alloc = VarAllocator::new();
    let k = spec.k as f64;
    let power = (spec.k - 1) as u32;
    let p_in = QuadExpr::var(&alloc.fresh(0.0, (2.0 * spec.r).exp() * VACUUM_VARIANCE)?);
    let q_in = QuadExpr::var(&alloc.fresh(0.0, (-2.0 * spec.r).exp() * VACUUM_VARIANCE)?);
    let p_out = &p_in - &q_in.pow(power).scale(k * spec.gamma);

    let mut channel = Channel { noise: spec.noise, alloc: &mut alloc };
    let base = channel.apply(&p_out)?;
    let q_noisy = channel.apply(&q_in)?;
    Ok(NullifierParts {
        base,
        probe: q_noisy.pow(power).scale(k),
        lambda: spec.lambda,
    })
}

pub fn build_phase_nullifier(
    k: usize,
    gamma: f64,
    lambda: f64,
    r: f64,
    noise: Noise,
) -> Result<QuadExpr> {
    Ok(phase_nullifier_parts(&PhaseSpec { k, gamma, lambda, r, noise })?.assemble())
}

/// Either state family, so optimizers can vary parameters uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Scenario {
    Hypergraph(ScenarioSpec),
    Phase(PhaseSpec),
}

impl Scenario {
    pub fn hypergraph(k: usize, gamma: f64, lambda: f64, squeeze: Squeeze, noise: Noise) -> Self {
        Scenario::Hypergraph(ScenarioSpec::homogeneous(k, gamma, lambda, squeeze.r(), noise))
    }

    pub fn phase(k: usize, gamma: f64, lambda: f64, squeeze: Squeeze, noise: Noise) -> Self {
        Scenario::Phase(PhaseSpec { k, gamma, lambda, r: squeeze.r(), noise })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Scenario::Hypergraph(s) => s.validate(),
            Scenario::Phase(s) => s.validate(),
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Scenario::Hypergraph(s) => s.k,
            Scenario::Phase(s) => s.k,
        }
    }

    pub fn gamma(&self) -> f64 {
        match self {
            Scenario::Hypergraph(s) => s.gamma,
            Scenario::Phase(s) => s.gamma,
        }
    }

    pub fn lambda(&self) -> f64 {
        match self {
            Scenario::Hypergraph(s) => s.lambda,
            Scenario::Phase(s) => s.lambda,
        }
    }

    pub fn noise(&self) -> Noise {
        match self {
            Scenario::Hypergraph(s) => s.noise,
            Scenario::Phase(s) => s.noise,
        }
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            Scenario::Hypergraph(s) => s.gamma = gamma,
            Scenario::Phase(s) => s.gamma = gamma,
        }
        out
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            Scenario::Hypergraph(s) => s.lambda = lambda,
            Scenario::Phase(s) => s.lambda = lambda,
        }
        out
    }

    pub fn with_noise(&self, noise: Noise) -> Self {
        let mut out = self.clone();
        match &mut out {
            Scenario::Hypergraph(s) => s.noise = noise,
            Scenario::Phase(s) => s.noise = noise,
        }
        out
    }

    /// Sets the same squeezing parameter on every mode.
    pub fn with_r(&self, r: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            Scenario::Hypergraph(s) => s.r = vec![r; s.k],
            Scenario::Phase(s) => s.r = r,
        }
        out
    }

    /// Sets the same initial occupation on every mode.
    pub fn with_n0(&self, n0: f64) -> Result<Self> {
        match self {
            Scenario::Hypergraph(s) => Ok(Scenario::Hypergraph(s.clone().with_n0(n0))),
            Scenario::Phase(_) => Err(Error::Unsupported(
                "initial thermal occupation is only modelled for hypergraph states".into(),
            )),
        }
    }

    /// Changes the mode count (or phase order). Hypergraph scenarios must be
    /// homogeneous so the per-mode parameters carry over.
    pub fn with_k(&self, k: usize) -> Result<Self> {
        match self {
            Scenario::Hypergraph(s) => {
                let (r, n0) = s
                    .homogeneous_params()
                    .ok_or_else(|| Error::Unsupported("changing k needs equal per-mode parameters".into()))?;
                Ok(Scenario::Hypergraph(ScenarioSpec::homogeneous(k, s.gamma, s.lambda, r, s.noise).with_n0(n0)))
            }
            Scenario::Phase(s) => Ok(Scenario::Phase(PhaseSpec { k, ..*s })),
        }
    }

    /// Number of distinct nullifiers the criterion must consider.
    pub fn nullifier_count(&self) -> usize {
        match self {
            Scenario::Hypergraph(s) => {
                if s.homogeneous_params().is_some() {
                    1
                } else {
                    s.k
                }
            }
            Scenario::Phase(_) => 1,
        }
    }

    /// The scenario measuring nullifier `index` (one-based).
    pub fn for_nullifier(&self, index: usize) -> Self {
        match self {
            Scenario::Hypergraph(s) => Scenario::Hypergraph(s.clone().with_index(index)),
            Scenario::Phase(_) => self.clone(),
        }
    }

    pub fn nullifier_parts(&self) -> Result<NullifierParts> {
        match self {
            Scenario::Hypergraph(s) => hypergraph_nullifier_parts(s),
            Scenario::Phase(s) => phase_nullifier_parts(s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{expr_covariance, expr_mean, expr_variance};
    use approx::assert_abs_diff_eq;

    const HALF_LN2: f64 = std::f64::consts::LN_2 / 2.0;

    fn var(spec: &ScenarioSpec) -> f64 {
        expr_variance(&build_hypergraph_nullifier(spec).unwrap()).unwrap()
    }

    #[test]
    fn hypergraph_examples() {
        let s = ScenarioSpec::homogeneous(3, 1.0, 1.0, 0.0, Noise::Ideal);
        assert_abs_diff_eq!(var(&s), 0.5, epsilon = 1e-14);
        let s = ScenarioSpec::homogeneous(3, 1.0, 1.0, 0.0, Noise::Loss { transmittivity: 0.0 });
        assert_abs_diff_eq!(var(&s), 0.75, epsilon = 1e-14);
        let s = ScenarioSpec::homogeneous(2, 1.0, 1.0, -HALF_LN2, Noise::Thermal { nbar: 0.375 });
        assert_abs_diff_eq!(var(&s), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn phase_examples() {
        let v = |k, g, l| expr_variance(&build_phase_nullifier(k, g, l, 0.0, Noise::Ideal).unwrap()).unwrap();
        assert_abs_diff_eq!(v(2, 0.7, 0.7), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(v(3, 0.0, 0.0), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(v(3, 1.0, 1.0), 0.5, epsilon = 1e-14);
        // 0.5 + 9 * Var(q^2) with Var(q^2) = 2 sigma^4 at sigma^2 = 1/2
        assert_abs_diff_eq!(v(3, 1.0, 0.0), 5.0, epsilon = 1e-13);
    }

    #[test]
    fn squeeze_param_examples() {
        let r = squeeze_param(Squeeze::Momentum(3.0103));
        assert_abs_diff_eq!(r, -HALF_LN2, epsilon = 1e-5);
        assert_abs_diff_eq!((2.0 * r).exp() / 2.0, 0.25, epsilon = 1e-5);
        assert_eq!(squeeze_param(Squeeze::None), 0.0);
        assert_abs_diff_eq!(squeeze_param(Squeeze::Position(3.0103)), HALF_LN2, epsilon = 1e-5);
        assert_abs_diff_eq!(
            squeeze_param(Squeeze::Momentum(crate::constants::FACTOR_TWO_DB)),
            -HALF_LN2,
            epsilon = 1e-15
        );
    }

    #[test]
    fn parse_grammar() {
        assert_eq!("none".parse::<Squeeze>().unwrap(), Squeeze::None);
        assert_eq!("momentum:3dB".parse::<Squeeze>().unwrap(), Squeeze::Momentum(3.0));
        assert_eq!("position:1.5db".parse::<Squeeze>().unwrap(), Squeeze::Position(1.5));
        assert_eq!("r:-0.2".parse::<Squeeze>().unwrap(), Squeeze::Raw(-0.2));
        assert!("momentum:-3dB".parse::<Squeeze>().is_err());
        assert!("sideways:3dB".parse::<Squeeze>().is_err());
        assert_eq!("ideal".parse::<Noise>().unwrap(), Noise::Ideal);
        assert_eq!("loss:0.5".parse::<Noise>().unwrap(), Noise::Loss { transmittivity: 0.5 });
        assert_eq!("thermal:0.1".parse::<Noise>().unwrap(), Noise::Thermal { nbar: 0.1 });
        assert!("loss:1.5".parse::<Noise>().is_err());
        assert!("thermal:-1".parse::<Noise>().is_err());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad_t = ScenarioSpec::homogeneous(3, 1.0, 1.0, 0.0, Noise::Loss { transmittivity: 1.2 });
        assert!(build_hypergraph_nullifier(&bad_t).is_err());
        let bad_n = ScenarioSpec::homogeneous(3, 1.0, 1.0, 0.0, Noise::Thermal { nbar: -0.1 });
        assert!(build_hypergraph_nullifier(&bad_n).is_err());
        let bad_k = ScenarioSpec::homogeneous(1, 1.0, 1.0, 0.0, Noise::Ideal);
        assert!(build_hypergraph_nullifier(&bad_k).is_err());
        let bad_index = ScenarioSpec::homogeneous(3, 1.0, 1.0, 0.0, Noise::Ideal).with_index(4);
        assert!(build_hypergraph_nullifier(&bad_index).is_err());
        assert!(build_phase_nullifier(1, 1.0, 1.0, 0.0, Noise::Ideal).is_err());
    }

    #[test]
    fn reduction_identities() {
        for k in 2..=5 {
            let ideal = ScenarioSpec::homogeneous(k, 1.3, 0.4, -0.2, Noise::Ideal);
            let lossless = ScenarioSpec { noise: Noise::Loss { transmittivity: 1.0 }, ..ideal.clone() };
            let cold = ScenarioSpec { noise: Noise::Thermal { nbar: 0.0 }, ..ideal.clone() };
            assert_abs_diff_eq!(var(&ideal), var(&lossless), epsilon = 1e-13);
            assert_abs_diff_eq!(var(&ideal), var(&cold), epsilon = 1e-13);
        }
    }

    #[test]
    fn nullifier_index_symmetry_and_decorrelation() {
        for noise in [Noise::Ideal, Noise::Loss { transmittivity: 0.6 }, Noise::Thermal { nbar: 0.2 }] {
            let base = ScenarioSpec::homogeneous(4, 0.8, 1.1, 0.15, noise);
            let v1 = var(&base);
            for i in 2..=4 {
                assert_abs_diff_eq!(var(&base.clone().with_index(i)), v1, epsilon = 1e-13);
            }
        }
    }

    /// All k nullifiers of one scenario share one set of variables.
    fn joint_nullifiers(k: usize, gamma: f64, lambda: f64, r: f64, noise: Noise) -> Vec<QuadExpr> {
        let mut alloc = VarAllocator::new();
        let p: Vec<_> = (0..k)
            .map(|_| QuadExpr::var(&alloc.fresh(0.0, (2.0 * r).exp() / 2.0).unwrap()))
            .collect();
        let q: Vec<_> = (0..k)
            .map(|_| QuadExpr::var(&alloc.fresh(0.0, (-2.0 * r).exp() / 2.0).unwrap()))
            .collect();
        let mut channel = Channel { noise, alloc: &mut alloc };
        let q_out: Vec<_> = q.iter().map(|x| channel.apply(x).unwrap()).collect();
        let mut out = Vec::new();
        for (i, p_i) in p.iter().enumerate() {
            let others: Vec<_> = (0..k).filter(|&j| j != i).map(|j| q[j].clone()).collect();
            let p_out = p_i - &QuadExpr::product(&others).scale(gamma);
            let p_noisy = channel.apply(&p_out).unwrap();
            let others_out: Vec<_> = (0..k).filter(|&j| j != i).map(|j| q_out[j].clone()).collect();
            out.push(&p_noisy + &QuadExpr::product(&others_out).scale(lambda));
        }
        out
    }

    #[test]
    fn nullifiers_have_zero_mean_and_are_uncorrelated() {
        for noise in [Noise::Ideal, Noise::Loss { transmittivity: 0.7 }, Noise::Thermal { nbar: 0.3 }] {
            for k in 2..=4 {
                let ns = joint_nullifiers(k, 1.2, 0.9, -0.3, noise);
                for (i, a) in ns.iter().enumerate() {
                    assert_abs_diff_eq!(expr_mean(a).unwrap(), 0.0, epsilon = 1e-14);
                    for b in ns.iter().skip(i + 1) {
                        assert_abs_diff_eq!(expr_covariance(a, b).unwrap(), 0.0, epsilon = 1e-14);
                    }
                }
                // same variance as the single-nullifier builder
                let single = var(&ScenarioSpec::homogeneous(k, 1.2, 0.9, -0.3, noise));
                assert_abs_diff_eq!(expr_variance(&ns[0]).unwrap(), single, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn sign_consistency_gamma_equals_lambda_is_optimal() {
        // (lambda - gamma)^2 structure: lambda = gamma removes the nonlinear term
        let s = ScenarioSpec::homogeneous(3, 2.0, 2.0, 0.3, Noise::Ideal);
        assert_abs_diff_eq!(var(&s), (0.6f64).exp() / 2.0, epsilon = 1e-13);
        let opposite = ScenarioSpec::homogeneous(3, 2.0, -2.0, 0.0, Noise::Ideal);
        assert_abs_diff_eq!(var(&opposite), 0.5 + 16.0 / 4.0, epsilon = 1e-13);
    }
}
