//! Parameter sweeps over one axis of a scenario template.
//!
//! Grid points are evaluated on the current rayon pool and emitted in grid
//! order. A quantity that fails at a grid point becomes a null cell.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{classify_scenario, criterion_margin, threshold, ThresholdPolicy};
use crate::depth::{depth, min_over_lambda, DepthOptions, NoiseKind};
use crate::error::{Error, Result};
use crate::evaluate::nullifier_variances;
use crate::scenario::{Noise, Scenario};
use crate::search::linspace;
use crate::table::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Gamma,
    Lambda,
    /// Common squeezing parameter `r`.
    R,
    Transmittivity,
    Nbar,
    N0,
    /// Mode count; grid values are rounded to integers and deduplicated.
    K,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Gamma => "gamma",
            SweepAxis::Lambda => "lambda",
            SweepAxis::R => "r",
            SweepAxis::Transmittivity => "T",
            SweepAxis::Nbar => "nbar",
            SweepAxis::N0 => "n0",
            SweepAxis::K => "k",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gamma" => SweepAxis::Gamma,
            "lambda" => SweepAxis::Lambda,
            "r" => SweepAxis::R,
            "T" | "t" | "transmittivity" => SweepAxis::Transmittivity,
            "nbar" => SweepAxis::Nbar,
            "n0" => SweepAxis::N0,
            "k" => SweepAxis::K,
            other => return Err(Error::invalid("axis", format!("unknown sweep axis `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axis: SweepAxis,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub scale: Scale,
}

impl SweepGrid {
    pub fn new(axis: SweepAxis, min: f64, max: f64, points: usize, scale: Scale) -> Result<Self> {
        let g = Self { axis, min, max, points, scale };
        g.validate()?;
        Ok(g)
    }

    pub fn linear(axis: SweepAxis, min: f64, max: f64, points: usize) -> Result<Self> {
        Self::new(axis, min, max, points, Scale::Linear)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::invalid("points", format!("need at least 2, got {}", self.points)));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.min >= self.max {
            return Err(Error::invalid("range", format!("need min < max, got [{}, {}]", self.min, self.max)));
        }
        if self.scale == Scale::Log && self.min <= 0.0 {
            return Err(Error::invalid("range", "log scale needs min > 0"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let xs = match self.scale {
            Scale::Linear => linspace(self.min, self.max, self.points),
            Scale::Log => linspace(self.min.ln(), self.max.ln(), self.points)
                .into_iter()
                .enumerate()
                .map(|(i, x)| match i {
                    0 => self.min,
                    i if i == self.points - 1 => self.max,
                    _ => x.exp(),
                })
                .collect(),
        };
        if self.axis == SweepAxis::K {
            let mut ks: Vec<f64> = xs.into_iter().map(f64::round).collect();
            ks.dedup();
            ks
        } else {
            xs
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Largest nullifier variance at the scenario's lambda.
    Variance,
    GroundThreshold,
    SqueezedThreshold,
    /// Threshold minus largest variance under the options' threshold policy.
    Margin,
    Classification,
    LambdaStar,
    MinVariance,
    TStar,
    LossFraction,
    NbarStar,
}

impl Quantity {
    pub const ALL: [Quantity; 10] = [
        Quantity::Variance,
        Quantity::GroundThreshold,
        Quantity::SqueezedThreshold,
        Quantity::Margin,
        Quantity::Classification,
        Quantity::LambdaStar,
        Quantity::MinVariance,
        Quantity::TStar,
        Quantity::LossFraction,
        Quantity::NbarStar,
    ];

    /// Column name in emitted tables.
    pub fn column(self) -> &'static str {
        match self {
            Quantity::Variance => "variance",
            Quantity::GroundThreshold => "ground_thr",
            Quantity::SqueezedThreshold => "squeezed_thr",
            Quantity::Margin => "margin",
            Quantity::Classification => "class",
            Quantity::LambdaStar => "lambda_star",
            Quantity::MinVariance => "var_min",
            Quantity::TStar => "T_star",
            Quantity::LossFraction => "loss_fraction",
            Quantity::NbarStar => "nbar_star",
        }
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.column() == s)
            .ok_or_else(|| Error::invalid("outputs", format!("unknown quantity `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// On a gamma axis, set lambda to gamma at each point.
    pub tie_lambda_to_gamma: bool,
    pub depth: DepthOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { tie_lambda_to_gamma: true, depth: DepthOptions::default() }
    }
}

/// The template with the axis set to `x`.
pub fn apply_axis(template: &Scenario, axis: SweepAxis, x: f64, opts: &SweepOptions) -> Result<Scenario> {
    Ok(match axis {
        SweepAxis::Gamma if opts.tie_lambda_to_gamma => template.with_gamma(x).with_lambda(x),
        SweepAxis::Gamma => template.with_gamma(x),
        SweepAxis::Lambda => template.with_lambda(x),
        SweepAxis::R => template.with_r(x),
        SweepAxis::Transmittivity => template.with_noise(Noise::Loss { transmittivity: x }),
        SweepAxis::Nbar => template.with_noise(Noise::Thermal { nbar: x }),
        SweepAxis::N0 => template.with_n0(x)?,
        SweepAxis::K => template.with_k(x as usize)?,
    })
}

/// Evaluates one quantity for one scenario.
pub fn evaluate_quantity(s: &Scenario, q: Quantity, opts: &DepthOptions) -> Result<Cell> {
    let l = s.lambda();
    Ok(match q {
        Quantity::Variance => {
            let vs = nullifier_variances(s)?;
            vs.into_iter().fold(f64::NEG_INFINITY, f64::max).into()
        }
        Quantity::GroundThreshold => threshold(s, ThresholdPolicy::Ground, l)?.value.into(),
        Quantity::SqueezedThreshold => threshold(s, ThresholdPolicy::LocalSqueezed, l)?.value.into(),
        Quantity::Margin => criterion_margin(s, opts.threshold, l)?.into(),
        Quantity::Classification => classify_scenario(s, opts.threshold)?.class.as_str().into(),
        Quantity::LambdaStar => min_over_lambda(s)?.0.into(),
        Quantity::MinVariance => min_over_lambda(s)?.1.into(),
        Quantity::TStar => depth(s, NoiseKind::Loss, opts)?.critical_value.into(),
        Quantity::LossFraction => depth(s, NoiseKind::Loss, opts)?.loss_fraction().into(),
        Quantity::NbarStar => depth(s, NoiseKind::Thermalisation, opts)?.critical_value.into(),
    })
}

/// Evaluates `outputs` at every grid point. The first column is the axis.
pub fn sweep(template: &Scenario, grid: &SweepGrid, outputs: &[Quantity], opts: &SweepOptions) -> Result<Table> {
    grid.validate()?;
    template.validate()?;
    let xs = grid.values();
    let rows: Vec<Vec<Cell>> = xs
        .par_iter()
        .map(|&x| {
            let mut row = vec![if grid.axis == SweepAxis::K { Cell::Int(x as i64) } else { Cell::Num(x) }];
            let point = apply_axis(template, grid.axis, x, opts);
            for &q in outputs {
                let cell = point
                    .as_ref()
                    .map_err(Clone::clone)
                    .and_then(|s| evaluate_quantity(s, q, &opts.depth))
                    .unwrap_or_else(|e| {
                        log::debug!("{} at {}={x}: {e}", q.column(), grid.axis);
                        Cell::Null
                    });
                row.push(cell);
            }
            row
        })
        .collect();
    let mut table = Table::new(std::iter::once(grid.axis.as_str()).chain(outputs.iter().map(|q| q.column())));
    for row in rows {
        table.push(row);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::FACTOR_TWO_DB;
    use crate::depth::LambdaPolicy;
    use crate::scenario::Squeeze;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_validation() {
        assert!(SweepGrid::linear(SweepAxis::Gamma, 0.0, 1.0, 1).is_err());
        assert!(SweepGrid::linear(SweepAxis::Gamma, 1.0, 1.0, 5).is_err());
        assert!(SweepGrid::new(SweepAxis::Gamma, 0.0, 1.0, 5, Scale::Log).is_err());
        let g = SweepGrid::new(SweepAxis::Nbar, 0.01, 1.0, 3, Scale::Log).unwrap();
        let v = g.values();
        assert_eq!(v[0], 0.01);
        assert_abs_diff_eq!(v[1], 0.1, epsilon = 1e-15);
        assert_eq!(v[2], 1.0);
        let k = SweepGrid::linear(SweepAxis::K, 3.0, 7.0, 9).unwrap();
        assert_eq!(k.values(), vec![3.0, 4.0, 5.0, 6.0, 7.0]);
    }

    #[test]
    fn gamma_sweep_of_unsqueezed_triad_is_flat() {
        let s = Scenario::hypergraph(3, 1.0, 1.0, Squeeze::None, Noise::Ideal);
        let g = SweepGrid::linear(SweepAxis::Gamma, 0.0, 4.0, 17).unwrap();
        let t = sweep(&s, &g, &[Quantity::Variance], &SweepOptions::default()).unwrap();
        for v in t.numbers("variance").unwrap() {
            assert_abs_diff_eq!(v.unwrap(), 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn lambda_sweep_is_a_parabola() {
        let s = Scenario::hypergraph(4, 1.2, 0.0, Squeeze::Momentum(2.0), Noise::Loss { transmittivity: 0.7 });
        let g = SweepGrid::linear(SweepAxis::Lambda, -3.0, 3.0, 25).unwrap();
        let t = sweep(&s, &g, &[Quantity::Variance], &SweepOptions::default()).unwrap();
        let xs: Vec<f64> = t.numbers("lambda").unwrap().into_iter().flatten().collect();
        let ys: Vec<f64> = t.numbers("variance").unwrap().into_iter().flatten().collect();
        let (x0, x1, x2) = (xs[0], xs[12], xs[24]);
        let (y0, y1, y2) = (ys[0], ys[12], ys[24]);
        for (&x, &y) in xs.iter().zip(&ys) {
            let lagrange = y0 * (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2))
                + y1 * (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2))
                + y2 * (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1));
            assert_abs_diff_eq!(y, lagrange, epsilon = 1e-12);
        }
    }

    #[test]
    fn failed_depths_become_null_cells() {
        // lambda stays at 1 while gamma grows, so the criterion fails even without noise
        let s = Scenario::hypergraph(3, 1.0, 1.0, Squeeze::Momentum(FACTOR_TWO_DB), Noise::Ideal);
        let depth = DepthOptions { lambda: LambdaPolicy::FixedValue(1.0), ..Default::default() };
        let opts = SweepOptions { tie_lambda_to_gamma: false, depth };
        let g = SweepGrid::linear(SweepAxis::Gamma, 1.0, 6.0, 6).unwrap();
        let t = sweep(&s, &g, &[Quantity::TStar, Quantity::NbarStar], &opts).unwrap();
        let ts = t.numbers("T_star").unwrap();
        assert!(ts[0].is_some());
        assert!(ts.iter().any(Option::is_none));
    }

    #[test]
    fn sweep_is_deterministic_across_pools() {
        let s = Scenario::hypergraph(3, 1.0, 1.0, Squeeze::Momentum(FACTOR_TWO_DB), Noise::Ideal);
        let g = SweepGrid::linear(SweepAxis::Gamma, 0.2, 3.0, 12).unwrap();
        let outputs = Quantity::ALL;
        let run = |n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap()
                .install(|| sweep(&s, &g, &outputs, &SweepOptions::default()).unwrap())
        };
        assert_eq!(run(1).to_csv_string(), run(3).to_csv_string());
    }

    #[test]
    fn k_sweep_columns() {
        let s = Scenario::hypergraph(3, 1.0, 1.0, Squeeze::Momentum(FACTOR_TWO_DB), Noise::Ideal);
        let g = SweepGrid::linear(SweepAxis::K, 2.0, 4.0, 3).unwrap();
        let t = sweep(&s, &g, &[Quantity::TStar, Quantity::NbarStar], &SweepOptions::default()).unwrap();
        let n = t.numbers("nbar_star").unwrap();
        assert_abs_diff_eq!(n[0].unwrap(), 0.375, epsilon = 1e-9);
        assert_abs_diff_eq!(n[1].unwrap(), (11f64.sqrt() - 3.0) / 2.0, epsilon = 1e-9);
        assert_eq!(t.column("k").unwrap()[2], &Cell::Int(4));
    }
}
