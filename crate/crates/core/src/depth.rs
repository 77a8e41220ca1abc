//! Scalar optimizations and nonclassicality depths.
//!
//! Loss depth is reported as the critical transmittivity `T*`: the criterion
//! holds for every `T > T*`, so smaller is more robust and `T* = 0` means the
//! state survives arbitrary loss. Thermalisation depth is the largest
//! occupation `nbar*` for which the criterion still holds.
//!
//! Every search starts from a coarse grid that locates the bracket; the
//! refinement is bisection for depths and golden-section for optima.

use serde::{Deserialize, Serialize};

use crate::criteria::{
    best_lambda_from_quadratics, default_lambda_bracket, margin_from_quadratics, ThresholdPolicy,
};
use crate::error::{Error, Result};
use crate::evaluate::{lambda_quadratic, nullifier_quadratics, variance};
use crate::scenario::{Noise, Scenario};
use crate::search::{geomspace, linspace, scan_minimize, scan_minimize_on, PRESCAN_POINTS};

/// Width of the final bisection bracket on the noise parameter.
pub const DEPTH_TOL: f64 = 1e-10;

/// Occupation beyond which thermal depth is reported as unbounded.
pub const MAX_OCCUPATION: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    Loss,
    Thermalisation,
    /// Initial thermal occupation of the inputs.
    InitialThermal,
}

impl NoiseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::Loss => "loss",
            NoiseKind::Thermalisation => "thermalisation",
            NoiseKind::InitialThermal => "initial-thermal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", content = "value", rename_all = "kebab-case")]
pub enum LambdaPolicy {
    FixedAtGamma,
    FixedValue(f64),
    /// Maximize the criterion margin over lambda at every probe.
    Optimized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthOptions {
    pub lambda: LambdaPolicy,
    pub threshold: ThresholdPolicy,
    /// Search bracket for `LambdaPolicy::Optimized`; defaults per scenario.
    pub lambda_bracket: Option<(f64, f64)>,
}

impl Default for DepthOptions {
    fn default() -> Self {
        Self {
            lambda: LambdaPolicy::FixedAtGamma,
            threshold: ThresholdPolicy::LocalSqueezed,
            lambda_bracket: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthResult {
    pub noise_kind: NoiseKind,
    /// `T*` for loss, `nbar*` otherwise.
    pub critical_value: f64,
    pub lambda_policy: LambdaPolicy,
    pub threshold_policy: ThresholdPolicy,
    pub margin_at_critical: f64,
    pub lambda_at_critical: f64,
    /// The criterion holds over the whole noise range.
    pub never_fails: bool,
}

impl DepthResult {
    /// `1 - T*` for loss depths.
    pub fn loss_fraction(&self) -> Option<f64> {
        (self.noise_kind == NoiseKind::Loss).then_some(1.0 - self.critical_value)
    }
}

fn with_noise_level(s: &Scenario, kind: NoiseKind, x: f64) -> Result<Scenario> {
    match kind {
        NoiseKind::Loss => Ok(s.with_noise(Noise::Loss { transmittivity: x })),
        NoiseKind::Thermalisation => Ok(s.with_noise(Noise::Thermal { nbar: x })),
        NoiseKind::InitialThermal => s.with_n0(x),
    }
}

/// Criterion margin and the lambda used, under the given options.
pub fn probe_margin(s: &Scenario, opts: &DepthOptions) -> Result<(f64, f64)> {
    let quads = nullifier_quadratics(s)?;
    match opts.lambda {
        LambdaPolicy::FixedAtGamma => {
            let l = s.gamma();
            Ok((margin_from_quadratics(s, &quads, opts.threshold, l)?, l))
        }
        LambdaPolicy::FixedValue(l) => Ok((margin_from_quadratics(s, &quads, opts.threshold, l)?, l)),
        LambdaPolicy::Optimized => {
            let bracket = opts.lambda_bracket.unwrap_or_else(|| default_lambda_bracket(s));
            let (l, m) = best_lambda_from_quadratics(s, &quads, opts.threshold, bracket)?;
            Ok((m, l))
        }
    }
}

/// Variance-minimizing lambda and the variance there.
pub fn min_over_lambda(s: &Scenario) -> Result<(f64, f64)> {
    let q = lambda_quadratic(s)?;
    let l = q.argmin()? + 0.0;
    Ok((l, q.value(l)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SqueezeObjective {
    MinVariance,
    MaxMargin(DepthOptions),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeOptimum {
    pub r: f64,
    /// Variance for `MinVariance`, margin for `MaxMargin`.
    pub value: f64,
}

/// Optimizes the common squeezing parameter on `bracket` (tolerance 1e-10 on `r`).
pub fn optimize_squeezing(
    s: &Scenario,
    bracket: (f64, f64),
    objective: SqueezeObjective,
) -> Result<SqueezeOptimum> {
    match objective {
        SqueezeObjective::MinVariance => {
            let m = scan_minimize(|r| variance(&s.with_r(r)).map(|v| v.value), bracket.0, bracket.1, 1e-10)?;
            Ok(SqueezeOptimum { r: m.x, value: m.value })
        }
        SqueezeObjective::MaxMargin(opts) => {
            let m = scan_minimize(
                |r| probe_margin(&s.with_r(r), &opts).map(|(m, _)| -m),
                bracket.0,
                bracket.1,
                1e-10,
            )?;
            Ok(SqueezeOptimum { r: m.x, value: -m.value })
        }
    }
}

/// Critical noise level at which the criterion is lost.
///
/// Fails with [`Error::DepthUndefined`] when the criterion does not hold
/// without noise. The noise level already set on `s` for `kind` is ignored.
pub fn depth(s: &Scenario, kind: NoiseKind, opts: &DepthOptions) -> Result<DepthResult> {
    let base = match kind {
        NoiseKind::InitialThermal => s.clone(),
        _ => s.with_noise(Noise::Ideal),
    };
    let probe = |x: f64| -> Result<(f64, f64)> { probe_margin(&with_noise_level(&base, kind, x)?, opts) };
    let passes = |x: f64| -> Result<bool> { Ok(probe(x)?.0 > 0.0) };

    let clean = match kind {
        NoiseKind::Loss => 1.0,
        _ => 0.0,
    };
    let (m_clean, _) = probe(clean)?;
    if !(m_clean > 0.0) {
        return Err(Error::DepthUndefined { margin: m_clean });
    }

    let finish = |critical: f64, never_fails: bool| -> Result<DepthResult> {
        let (margin, lambda) = if critical.is_finite() { probe(critical)? } else { (f64::INFINITY, f64::NAN) };
        Ok(DepthResult {
            noise_kind: kind,
            critical_value: critical,
            lambda_policy: opts.lambda,
            threshold_policy: opts.threshold,
            margin_at_critical: margin,
            lambda_at_critical: lambda,
            never_fails,
        })
    };

    // (last failing level, first passing level) next to the clean end
    let (mut fail_x, mut pass_x) = match kind {
        NoiseKind::Loss => {
            let grid = linspace(0.0, 1.0, PRESCAN_POINTS);
            let mut bracket = None;
            for w in grid.windows(2).rev() {
                if !passes(w[0])? {
                    bracket = Some((w[0], w[1]));
                    break;
                }
            }
            match bracket {
                Some(b) => b,
                None => return finish(0.0, true),
            }
        }
        _ => {
            let mut hi = 1.0;
            while passes(hi)? {
                hi *= 2.0;
                if hi > MAX_OCCUPATION {
                    return finish(f64::INFINITY, true);
                }
            }
            let grid = linspace(0.0, hi, PRESCAN_POINTS);
            let mut bracket = None;
            for w in grid.windows(2) {
                if !passes(w[1])? {
                    bracket = Some((w[1], w[0]));
                    break;
                }
            }
            bracket.expect("grid ends at a failing level")
        }
    };

    while (pass_x - fail_x).abs() > DEPTH_TOL {
        let mid = 0.5 * (pass_x + fail_x);
        if passes(mid)? {
            pass_x = mid;
        } else {
            fail_x = mid;
        }
    }
    if kind == NoiseKind::Loss && fail_x == 0.0 {
        return finish(0.0, true);
    }
    finish(0.5 * (pass_x + fail_x), false)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaOptimum {
    pub gamma: f64,
    pub depth: DepthResult,
    /// Several grid values of gamma already reach the best possible depth
    /// (`T* = 0`, or unbounded `nbar*`); `gamma` is the smallest of them.
    pub plateau: bool,
}

/// Robustness objective to minimize: `T*` for loss, `-nbar*` otherwise.
/// Undefined depths count as the worst value.
fn depth_objective(kind: NoiseKind, d: Result<DepthResult>) -> Result<f64> {
    match d {
        Ok(d) => Ok(match kind {
            NoiseKind::Loss => d.critical_value,
            _ => -d.critical_value,
        }),
        Err(Error::DepthUndefined { .. }) => Ok(match kind {
            NoiseKind::Loss => 1.0,
            _ => 0.0,
        }),
        Err(e) => Err(e),
    }
}

/// Optimizes a depth over gamma. `depth_at` evaluates the depth for one gamma.
/// The pre-scan grid is geometric when the bracket is positive and spans more
/// than a factor of ten.
pub fn optimize_depth_over_gamma<F>(
    kind: NoiseKind,
    bracket: (f64, f64),
    mut depth_at: F,
) -> Result<GammaOptimum>
where
    F: FnMut(f64) -> Result<DepthResult>,
{
    if !(bracket.0 < bracket.1) {
        return Err(Error::invalid("gamma_bracket", format!("[{}, {}] is empty", bracket.0, bracket.1)));
    }
    let grid = if bracket.0 > 0.0 && bracket.1 > 10.0 * bracket.0 {
        geomspace(bracket.0, bracket.1, PRESCAN_POINTS)
    } else {
        linspace(bracket.0, bracket.1, PRESCAN_POINTS)
    };
    let on_grid: Vec<Result<DepthResult>> = grid.iter().map(|&g| depth_at(g)).collect();
    let saturated: Vec<(f64, DepthResult)> = grid
        .iter()
        .zip(&on_grid)
        .filter_map(|(&g, d)| d.as_ref().ok().filter(|d| d.never_fails).map(|d| (g, *d)))
        .collect();
    if saturated.len() > 1 {
        let (gamma, depth) = saturated[0];
        return Ok(GammaOptimum { gamma, depth, plateau: true });
    }
    let objective = |g: f64| match grid.iter().position(|&x| x == g) {
        Some(i) => depth_objective(kind, on_grid[i].clone()),
        None => depth_objective(kind, depth_at(g)),
    };
    let m = scan_minimize_on(objective, &grid, 1e-6)?;
    let depth = depth_at(m.x)?;
    Ok(GammaOptimum { gamma: m.x, depth, plateau: false })
}

/// Gamma maximizing robustness of the template scenario to `kind`.
pub fn optimize_gamma_for_depth(
    template: &Scenario,
    kind: NoiseKind,
    gamma_bracket: (f64, f64),
    opts: &DepthOptions,
) -> Result<GammaOptimum> {
    optimize_depth_over_gamma(kind, gamma_bracket, |g| depth(&template.with_gamma(g), kind, opts))
}

/// Squeezing on `r_bracket` that maximizes robustness, with its depth.
pub fn optimize_squeezing_for_depth(
    s: &Scenario,
    kind: NoiseKind,
    r_bracket: (f64, f64),
    opts: &DepthOptions,
) -> Result<(f64, DepthResult)> {
    let m = scan_minimize(
        |r| depth_objective(kind, depth(&s.with_r(r), kind, opts)),
        r_bracket.0,
        r_bracket.1,
        1e-6,
    )?;
    Ok((m.x, depth(&s.with_r(m.x), kind, opts)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::{loss_variance, pure_variance};
    use crate::constants::FACTOR_TWO_DB;
    use crate::criteria::{squeezed_threshold, ThresholdPolicy};
    use crate::scenario::Squeeze;
    use approx::assert_abs_diff_eq;

    fn triad(k: usize, squeeze: Squeeze) -> Scenario {
        Scenario::hypergraph(k, 1.0, 1.0, squeeze, Noise::Ideal)
    }

    const MOM: Squeeze = Squeeze::Momentum(FACTOR_TWO_DB);

    #[test]
    fn min_over_lambda_examples() {
        let s = Scenario::hypergraph(3, 1.3, 0.0, Squeeze::Raw(-0.2), Noise::Ideal);
        let (l, v) = min_over_lambda(&s).unwrap();
        assert_abs_diff_eq!(l, 1.3, epsilon = 1e-14);
        assert_abs_diff_eq!(v, (-0.4f64).exp() / 2.0, epsilon = 1e-14);

        let s = Scenario::hypergraph(3, 0.0, 0.7, Squeeze::None, Noise::Loss { transmittivity: 0.3 });
        let (l, v) = min_over_lambda(&s).unwrap();
        assert_eq!(l, 0.0);
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-15);

        let s = Scenario::hypergraph(3, 1.0, 0.0, MOM, Noise::Loss { transmittivity: 0.46 });
        let (l, v) = min_over_lambda(&s).unwrap();
        assert_abs_diff_eq!(l, 0.59, epsilon = 0.01);
        let r = -std::f64::consts::LN_2 / 2.0;
        assert_abs_diff_eq!(v, loss_variance(3, 1.0, l, r, 0.46).unwrap(), epsilon = 1e-14);
        assert_abs_diff_eq!(v, 0.662, epsilon = 1e-3);
    }

    #[test]
    fn pure_state_prefers_momentum_squeezing() {
        let s = Scenario::hypergraph(3, 1.5, 1.5, Squeeze::None, Noise::Ideal);
        let opt = optimize_squeezing(&s, (-1.0, 1.0), SqueezeObjective::MinVariance).unwrap();
        assert_abs_diff_eq!(opt.r, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn squeezing_optimum_reproduces_local_squeezed_bound() {
        for k in 2..=5 {
            for &l in &[0.3, 1.0, 2.5] {
                let s = Scenario::hypergraph(k, 0.0, l, Squeeze::None, Noise::Ideal);
                let opt = optimize_squeezing(&s, (-3.0, 3.0), SqueezeObjective::MinVariance).unwrap();
                let expected = squeezed_threshold(k, l).unwrap().value;
                assert_abs_diff_eq!(opt.value, expected, epsilon = 1e-9);
                assert_abs_diff_eq!(
                    opt.value,
                    pure_variance(k, 0.0, l, opt.r),
                    epsilon = 1e-15
                );
            }
        }
    }

    #[test]
    fn strong_gamma_under_loss_prefers_position_squeezing() {
        let s = Scenario::hypergraph(3, 3.0, 3.0, Squeeze::None, Noise::Loss { transmittivity: 0.85 });
        let opt = optimize_squeezing(&s, (-1.5, 1.5), SqueezeObjective::MinVariance).unwrap();
        assert!(opt.r > 0.0, "r* = {}", opt.r);
        // regression value
        assert_abs_diff_eq!(opt.r, 0.083_472_79, epsilon = 1e-7);
        let margin = optimize_squeezing(
            &s,
            (-1.5, 1.5),
            SqueezeObjective::MaxMargin(DepthOptions::default()),
        )
        .unwrap();
        assert_abs_diff_eq!(margin.r, opt.r, epsilon = 1e-6);
    }

    #[test]
    fn triad_depths() {
        let opts = DepthOptions::default();
        let loss = depth(&triad(3, MOM), NoiseKind::Loss, &opts).unwrap();
        assert_abs_diff_eq!(loss.critical_value, (4.0 - 11f64.sqrt()).powi(2), epsilon = 1e-9);
        assert!(!loss.never_fails);
        assert!(loss.margin_at_critical.abs() <= 1e-8);
        assert_abs_diff_eq!(loss.loss_fraction().unwrap(), 1.0 - loss.critical_value, epsilon = 0.0);
        let th = depth(&triad(3, MOM), NoiseKind::Thermalisation, &opts).unwrap();
        assert_abs_diff_eq!(th.critical_value, (11f64.sqrt() - 3.0) / 2.0, epsilon = 1e-9);
        assert!(th.margin_at_critical.abs() <= 1e-8);
    }

    #[test]
    fn dyad_survives_arbitrary_loss() {
        let d = depth(&triad(2, MOM), NoiseKind::Loss, &DepthOptions::default()).unwrap();
        assert!(d.never_fails);
        assert_eq!(d.critical_value, 0.0);
        let th = depth(&triad(2, MOM), NoiseKind::Thermalisation, &DepthOptions::default()).unwrap();
        assert_abs_diff_eq!(th.critical_value, 0.375, epsilon = 1e-9);
    }

    #[test]
    fn undefined_depth_is_an_error() {
        // lambda far from gamma: fails even without noise
        let s = Scenario::hypergraph(3, 1.0, 1.0, Squeeze::None, Noise::Ideal);
        let opts = DepthOptions { lambda: LambdaPolicy::FixedValue(5.0), ..Default::default() };
        assert!(matches!(depth(&s, NoiseKind::Loss, &opts), Err(Error::DepthUndefined { .. })));
    }

    #[test]
    fn bisection_postcondition() {
        let opts = DepthOptions::default();
        for k in 3..=5 {
            let s = triad(k, MOM);
            for kind in [NoiseKind::Loss, NoiseKind::Thermalisation] {
                let d = depth(&s, kind, &opts).unwrap();
                let eps = 10.0 * DEPTH_TOL;
                let at = |x: f64| probe_margin(&with_noise_level(&s, kind, x).unwrap(), &opts).unwrap().0;
                let (more_robust, less_robust) = match kind {
                    NoiseKind::Loss => (d.critical_value + eps, d.critical_value - eps),
                    _ => (d.critical_value - eps, d.critical_value + eps),
                };
                assert!(at(more_robust) > 0.0);
                assert!(at(less_robust) <= 0.0);
            }
        }
    }

    #[test]
    fn initial_thermal_depth_matches_closed_root() {
        // at lambda = gamma: (1 + 2 n0) e^{2r}/2 = threshold
        let s = Scenario::hypergraph(3, 2.0, 2.0, MOM, Noise::Ideal);
        let d = depth(&s, NoiseKind::InitialThermal, &DepthOptions::default()).unwrap();
        let thr = squeezed_threshold(3, 2.0).unwrap().value;
        assert_abs_diff_eq!(d.critical_value, (thr / 0.25 - 1.0) / 2.0, epsilon = 1e-9);
    }

    #[test]
    fn optimized_lambda_is_never_less_robust() {
        let fixed = DepthOptions::default();
        let opt = DepthOptions { lambda: LambdaPolicy::Optimized, ..Default::default() };
        for &(k, g, sq) in &[(3, 1.0, MOM), (4, 1.3, Squeeze::None), (3, 2.5, Squeeze::Position(3.0))] {
            let s = Scenario::hypergraph(k, g, g, sq, Noise::Ideal);
            let a = depth(&s, NoiseKind::Loss, &fixed).unwrap();
            let b = depth(&s, NoiseKind::Loss, &opt).unwrap();
            assert!(b.critical_value <= a.critical_value + 1e-9);
            let a = depth(&s, NoiseKind::Thermalisation, &fixed).unwrap();
            let b = depth(&s, NoiseKind::Thermalisation, &opt).unwrap();
            assert!(b.critical_value >= a.critical_value - 1e-9);
        }
    }

    #[test]
    fn dyad_loss_optimum_is_degenerate() {
        let s = Scenario::hypergraph(2, 1.0, 1.0, MOM, Noise::Ideal);
        let o = optimize_gamma_for_depth(&s, NoiseKind::Loss, (0.1, 3.0), &DepthOptions::default()).unwrap();
        // T* = 0 only at gamma = 1 exactly; the optimum approaches it
        assert_abs_diff_eq!(o.gamma, 1.0, epsilon = 1e-3);
        assert!(o.depth.critical_value < 1e-3);
    }

    #[test]
    fn triad_gamma_optimum_matches_grid() {
        let s = Scenario::hypergraph(3, 1.0, 1.0, Squeeze::None, Noise::Ideal);
        let opts = DepthOptions::default();
        let o = optimize_gamma_for_depth(&s, NoiseKind::Loss, (0.05, 5.0), &opts).unwrap();
        let grid_best = linspace(0.05, 5.0, 200)
            .into_iter()
            .filter_map(|g| depth(&s.with_gamma(g), NoiseKind::Loss, &opts).ok())
            .map(|d| d.critical_value)
            .fold(f64::INFINITY, f64::min);
        assert!(o.depth.critical_value <= grid_best + 1e-9);
        assert!(grid_best - o.depth.critical_value < 1e-3);
        // regression values
        assert_abs_diff_eq!(o.gamma, 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(o.depth.critical_value, 0.25, epsilon = 1e-6);
    }

    #[test]
    fn thermal_robustness_decreases_with_mode_count() {
        let opts = DepthOptions::default();
        let best = |k| {
            let s = Scenario::hypergraph(k, 1.0, 1.0, MOM, Noise::Ideal);
            optimize_gamma_for_depth(&s, NoiseKind::Thermalisation, (0.05, 5.0), &opts)
                .unwrap()
                .depth
                .critical_value
        };
        assert!(best(3) > best(4));
    }

    #[test]
    fn ground_policy_threshold_variant() {
        let opts = DepthOptions { threshold: ThresholdPolicy::Ground, ..Default::default() };
        let d = depth(&triad(4, MOM), NoiseKind::Loss, &opts).unwrap();
        assert!(d.critical_value > 0.725 && d.critical_value < 0.745);
    }
}
