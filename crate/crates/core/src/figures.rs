//! Data series behind each published figure, one [`Table`] per panel.
//!
//! Unless stated otherwise: `lambda = gamma`, squeezing magnitude is a
//! factor of two in variance (≈3 dB), and depths use the local-squeezed
//! threshold.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{DEFAULT_SEED, FACTOR_TWO_DB};
use crate::criteria::{threshold, ThresholdPolicy};
use crate::depth::{
    depth, optimize_depth_over_gamma, optimize_gamma_for_depth, optimize_squeezing_for_depth, DepthOptions,
    DepthResult, GammaOptimum, LambdaPolicy, NoiseKind,
};
use crate::error::{Error, Result};
use crate::evaluate::variance;
use crate::scenario::{Noise, Scenario, Squeeze};
use crate::search::{linspace, sign_changes};
use crate::table::{Cell, Table};

pub const TOOL_VERSION: &str = concat!("hypernull ", env!("CARGO_PKG_VERSION"));

/// Noise levels of the fixed-noise variance figures.
pub const FIXED_LOSS: f64 = 0.85;
pub const FIXED_NBAR: f64 = 0.05;

pub const OPTIMAL_GAMMA_BRACKET: (f64, f64) = (0.05, 100.0);

/// Phase-state optima move to very weak nonlinearity as the order grows.
pub const PHASE_GAMMA_BRACKET: (f64, f64) = (1e-4, 100.0);

/// Largest `|r|` explored when squeezing is co-optimized.
pub const CO_OPT_R_MAX: f64 = 1.5;

pub const MOMENTUM: Squeeze = Squeeze::Momentum(FACTOR_TWO_DB);
pub const POSITION: Squeeze = Squeeze::Position(FACTOR_TWO_DB);

/// The three squeezing classes compared throughout.
pub const SQUEEZE_CLASSES: [(&str, Squeeze); 3] = [("none", Squeeze::None), ("momentum", MOMENTUM), ("position", POSITION)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FigureName {
    Fig1,
    Fig2,
    Fig3,
    AppC,
    AppD,
    AppEVar,
    AppEDepth,
}

impl FigureName {
    pub const ALL: [FigureName; 7] = [
        FigureName::Fig1,
        FigureName::Fig2,
        FigureName::Fig3,
        FigureName::AppC,
        FigureName::AppD,
        FigureName::AppEVar,
        FigureName::AppEDepth,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureName::Fig1 => "fig1",
            FigureName::Fig2 => "fig2",
            FigureName::Fig3 => "fig3",
            FigureName::AppC => "appC",
            FigureName::AppD => "appD",
            FigureName::AppEVar => "appE-var",
            FigureName::AppEDepth => "appE-depth",
        }
    }

    pub fn panels(self) -> &'static [&'static str] {
        match self {
            FigureName::Fig1 | FigureName::Fig2 => &["dyad", "triad", "tetrad"],
            FigureName::Fig3 => &["all"],
            FigureName::AppC => &["triad"],
            FigureName::AppD => &["triad", "tetrad"],
            FigureName::AppEVar => &["quadratic", "cubic", "quartic"],
            FigureName::AppEDepth => &["cubic", "quartic", "kscan"],
        }
    }
}

impl fmt::Display for FigureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::invalid("figure", format!("unknown figure `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FigureOptions {
    /// Grid size override for the swept axis.
    pub points: Option<usize>,
    /// Also emit depths with squeezing optimized within each class.
    pub co_optimize_r: bool,
    /// Threshold that sets the noise levels of the first figure.
    pub fig1_threshold: ThresholdPolicy,
    /// Largest mode count or phase order in the depth-versus-k tables.
    pub kmax: usize,
    pub seed: u64,
}

impl Default for FigureOptions {
    fn default() -> Self {
        Self {
            points: None,
            co_optimize_r: false,
            fig1_threshold: ThresholdPolicy::Ground,
            kmax: 7,
            seed: DEFAULT_SEED,
        }
    }
}

fn panel_order(panel: &str) -> usize {
    match panel {
        "dyad" | "quadratic" => 2,
        "triad" | "cubic" => 3,
        _ => 4,
    }
}

fn base_table<S: Into<String>>(name: FigureName, panel: &str, opts: &FigureOptions, columns: impl IntoIterator<Item = S>) -> Table {
    Table::new(columns)
        .meta("tool", TOOL_VERSION)
        .meta("figure", name)
        .meta("panel", panel)
        .meta("seed", opts.seed)
}

/// Tables for `name`, one per panel, keyed by file stem (`<figure>_<panel>`).
pub fn generate(name: FigureName, panel: Option<&str>, opts: &FigureOptions) -> Result<Vec<(String, Table)>> {
    let panels: Vec<&str> = match panel {
        Some(p) if name.panels().contains(&p) => vec![p],
        Some(p) => {
            return Err(Error::invalid(
                "panel",
                format!("`{p}` is not a panel of {name}; expected one of {}", name.panels().join(", ")),
            ))
        }
        None => name.panels().to_vec(),
    };
    panels
        .into_iter()
        .map(|p| {
            let table = match name {
                FigureName::Fig1 => fig1(p, opts)?,
                FigureName::Fig2 => fixed_noise_variances(name, p, Family::Hypergraph, opts)?,
                FigureName::Fig3 => depth_vs_order(name, p, Family::Hypergraph, 3, opts)?,
                FigureName::AppC => initial_thermal(p, opts)?,
                FigureName::AppD => depth_vs_gamma(name, p, Family::Hypergraph, &SQUEEZE_CLASSES, opts)?,
                FigureName::AppEVar => fixed_noise_variances(name, p, Family::Phase, opts)?,
                FigureName::AppEDepth if p == "kscan" => depth_vs_order(name, p, Family::Phase, 3, opts)?,
                FigureName::AppEDepth => depth_vs_gamma(name, p, Family::Phase, &PHASE_SQUEEZINGS, opts)?,
            };
            Ok((format!("{name}_{p}"), table))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Hypergraph,
    Phase,
}

impl Family {
    fn scenario(self, k: usize, gamma: f64, lambda: f64, squeeze: Squeeze, noise: Noise) -> Scenario {
        match self {
            Family::Hypergraph => Scenario::hypergraph(k, gamma, lambda, squeeze, noise),
            Family::Phase => Scenario::phase(k, gamma, lambda, squeeze, noise),
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Family::Hypergraph => "hypergraph",
            Family::Phase => "phase",
        }
    }

    fn gamma_bracket(self) -> (f64, f64) {
        match self {
            Family::Hypergraph => OPTIMAL_GAMMA_BRACKET,
            Family::Phase => PHASE_GAMMA_BRACKET,
        }
    }
}

fn value_or_null(r: Result<f64>) -> Cell {
    r.map_or(Cell::Null, Cell::Num)
}

/// Noise levels at the depths of the unweighted state with momentum squeezing.
pub fn fig1_noise_levels(k: usize, policy: ThresholdPolicy) -> Result<(DepthResult, DepthResult)> {
    let s = Scenario::hypergraph(k, 1.0, 1.0, MOMENTUM, Noise::Ideal);
    let opts = DepthOptions { lambda: LambdaPolicy::FixedAtGamma, threshold: policy, lambda_bracket: None };
    Ok((depth(&s, NoiseKind::Loss, &opts)?, depth(&s, NoiseKind::Thermalisation, &opts)?))
}

fn fig1(panel: &str, opts: &FigureOptions) -> Result<Table> {
    let k = panel_order(panel);
    let (loss, thermal) = fig1_noise_levels(k, opts.fig1_threshold)?;
    let t = loss.critical_value;
    let nbar = thermal.critical_value;
    let mut table = base_table(
        FigureName::Fig1,
        panel,
        opts,
        [
            "lambda",
            "var_pure_r0",
            "var_pure_3db",
            "var_loss",
            "var_thermal",
            "ground_thr",
            "squeezed_thr",
            "var_loss_r0",
            "var_thermal_r0",
        ],
    )
    .meta("k", k)
    .meta("gamma", 1.0)
    .meta("squeeze", MOMENTUM)
    .meta("transmittivity", format!("{t:.16e}"))
    .meta("nbar", format!("{nbar:.16e}"))
    .meta("depth_threshold", opts.fig1_threshold.as_str());
    let lambdas = linspace(-1.0, 3.0, opts.points.unwrap_or(201));
    for l in lambdas {
        let v = |sq: Squeeze, noise: Noise| value_or_null(variance(&Scenario::hypergraph(k, 1.0, l, sq, noise)).map(|v| v.value));
        let lossy = Noise::Loss { transmittivity: t };
        let hot = Noise::Thermal { nbar };
        let probe = Scenario::hypergraph(k, 1.0, l, Squeeze::None, Noise::Ideal);
        table.push(vec![
            l.into(),
            v(Squeeze::None, Noise::Ideal),
            v(MOMENTUM, Noise::Ideal),
            v(MOMENTUM, lossy),
            v(MOMENTUM, hot),
            value_or_null(threshold(&probe, ThresholdPolicy::Ground, l).map(|t| t.value)),
            value_or_null(threshold(&probe, ThresholdPolicy::LocalSqueezed, l).map(|t| t.value)),
            v(Squeeze::None, lossy),
            v(Squeeze::None, hot),
        ]);
    }
    Ok(table)
}

fn fixed_noise_variances(name: FigureName, panel: &str, family: Family, opts: &FigureOptions) -> Result<Table> {
    let k = panel_order(panel);
    let noises = [("loss", Noise::Loss { transmittivity: FIXED_LOSS }), ("thermal", Noise::Thermal { nbar: FIXED_NBAR })];
    let mut columns = vec!["gamma".to_owned()];
    for (n, _) in &noises {
        for (s, _) in &SQUEEZE_CLASSES {
            columns.push(format!("var_{n}_{s}"));
        }
    }
    columns.extend(["ground_thr".to_owned(), "squeezed_thr".to_owned()]);
    let mut table = base_table(name, panel, opts, columns)
        .meta("family", family.as_str())
        .meta("k", k)
        .meta("lambda", "gamma")
        .meta("transmittivity", FIXED_LOSS)
        .meta("nbar", FIXED_NBAR)
        .meta("squeeze_magnitude", format!("{FACTOR_TWO_DB}dB"));
    let gammas = linspace(0.0, 5.0, opts.points.unwrap_or(201));
    let rows: Vec<Vec<Cell>> = gammas
        .par_iter()
        .map(|&g| {
            let mut row = vec![Cell::Num(g)];
            for (_, noise) in &noises {
                for (_, sq) in &SQUEEZE_CLASSES {
                    row.push(value_or_null(variance(&family.scenario(k, g, g, *sq, *noise)).map(|v| v.value)));
                }
            }
            let probe = family.scenario(k, g, g, Squeeze::None, Noise::Ideal);
            row.push(value_or_null(threshold(&probe, ThresholdPolicy::Ground, g).map(|t| t.value)));
            row.push(value_or_null(threshold(&probe, ThresholdPolicy::LocalSqueezed, g).map(|t| t.value)));
            row
        })
        .collect();
    for row in rows {
        table.push(row);
    }
    Ok(table)
}

/// Values of `gamma` in `bracket` where the `lambda = gamma` variances with
/// squeezings `a` and `b` cross, located on a 400-point grid and bisected to 1e-12.
pub fn variance_crossovers(
    template: &Scenario,
    noise: Noise,
    a: Squeeze,
    b: Squeeze,
    bracket: (f64, f64),
) -> Result<Vec<f64>> {
    let at = |g: f64, sq: Squeeze| -> Result<f64> {
        Ok(variance(&template.with_gamma(g).with_lambda(g).with_r(sq.r()).with_noise(noise))?.value)
    };
    sign_changes(|g| Ok(at(g, a)? - at(g, b)?), bracket.0, bracket.1, 400, 1e-12)
}

fn fig_depth_options() -> DepthOptions {
    DepthOptions { lambda: LambdaPolicy::FixedAtGamma, threshold: ThresholdPolicy::LocalSqueezed, lambda_bracket: None }
}

/// Gamma maximizing robustness, with squeezing fixed or co-optimized within
/// the class of `squeeze` (`none` stays unsqueezed). Returns `r` used at the optimum.
pub fn optimal_depth(
    template: &Scenario,
    squeeze: Squeeze,
    kind: NoiseKind,
    co_optimize_r: bool,
    bracket: (f64, f64),
) -> Result<(GammaOptimum, f64)> {
    let opts = fig_depth_options();
    let r_range = match squeeze {
        Squeeze::None => None,
        sq if sq.r() < 0.0 => Some((-CO_OPT_R_MAX, 0.0)),
        _ => Some((0.0, CO_OPT_R_MAX)),
    };
    let template = template.with_r(squeeze.r());
    match r_range.filter(|_| co_optimize_r) {
        None => Ok((optimize_gamma_for_depth(&template, kind, bracket, &opts)?, squeeze.r())),
        Some(range) => {
            let best = optimize_depth_over_gamma(kind, bracket, |g| {
                optimize_squeezing_for_depth(&template.with_gamma(g), kind, range, &opts).map(|(_, d)| d)
            })?;
            let (r, _) = optimize_squeezing_for_depth(&template.with_gamma(best.gamma), kind, range, &opts)?;
            Ok((best, r))
        }
    }
}

fn depth_vs_order(name: FigureName, panel: &str, family: Family, kmin: usize, opts: &FigureOptions) -> Result<Table> {
    let mut table = base_table(
        name,
        panel,
        opts,
        [
            "mode",
            "k",
            "squeeze",
            "gamma_loss",
            "T_star",
            "loss_fraction",
            "r_loss",
            "loss_plateau",
            "gamma_thermal",
            "nbar_star",
            "r_thermal",
        ],
    )
    .meta("family", family.as_str())
    .meta("lambda", "gamma")
    .meta("threshold", ThresholdPolicy::LocalSqueezed.as_str())
    .meta("gamma_bracket", format!("[{}, {}]", family.gamma_bracket().0, family.gamma_bracket().1))
    .meta("squeeze_magnitude", format!("{FACTOR_TWO_DB}dB"))
    .meta("co_optimize_r_max", CO_OPT_R_MAX);
    let mut modes = vec![("fixed", false)];
    if opts.co_optimize_r {
        modes.push(("co-optimized", true));
    }
    let mut jobs = Vec::new();
    for &(mode, co) in &modes {
        for k in kmin..=opts.kmax {
            for (label, sq) in SQUEEZE_CLASSES {
                jobs.push((mode, co, k, label, sq));
            }
        }
    }
    let rows: Vec<Vec<Cell>> = jobs
        .par_iter()
        .map(|&(mode, co, k, label, sq)| {
            let template = family.scenario(k, 1.0, 1.0, sq, Noise::Ideal);
            let loss = optimal_depth(&template, sq, NoiseKind::Loss, co, family.gamma_bracket());
            let thermal = optimal_depth(&template, sq, NoiseKind::Thermalisation, co, family.gamma_bracket());
            let mut row: Vec<Cell> = vec![mode.into(), k.into(), label.into()];
            match loss {
                Ok((o, r)) => row.extend([
                    o.gamma.into(),
                    o.depth.critical_value.into(),
                    o.depth.loss_fraction().into(),
                    r.into(),
                    Cell::Int(o.plateau as i64),
                ]),
                Err(_) => row.extend([Cell::Null, Cell::Null, Cell::Null, Cell::Null, Cell::Null]),
            }
            match thermal {
                Ok((o, r)) => row.extend([o.gamma.into(), o.depth.critical_value.into(), r.into()]),
                Err(_) => row.extend([Cell::Null, Cell::Null, Cell::Null]),
            }
            row
        })
        .collect();
    for row in rows {
        table.push(row);
    }
    Ok(table)
}

const PHASE_SQUEEZINGS: [(&str, Squeeze); 5] = [
    ("mom6db", Squeeze::Momentum(2.0 * FACTOR_TWO_DB)),
    ("mom3db", MOMENTUM),
    ("none", Squeeze::None),
    ("pos3db", POSITION),
    ("pos6db", Squeeze::Position(2.0 * FACTOR_TWO_DB)),
];

fn depth_vs_gamma(
    name: FigureName,
    panel: &str,
    family: Family,
    squeezings: &[(&str, Squeeze)],
    opts: &FigureOptions,
) -> Result<Table> {
    let k = panel_order(panel);
    let mut columns = vec!["gamma".to_owned()];
    columns.extend(squeezings.iter().map(|(s, _)| format!("T_star_{s}")));
    columns.extend(squeezings.iter().map(|(s, _)| format!("nbar_star_{s}")));
    let mut table = base_table(name, panel, opts, columns)
        .meta("family", family.as_str())
        .meta("k", k)
        .meta("lambda", "gamma")
        .meta("threshold", ThresholdPolicy::LocalSqueezed.as_str());
    let d_opts = fig_depth_options();
    let gammas = linspace(0.05, 5.0, opts.points.unwrap_or(100));
    let rows: Vec<Vec<Cell>> = gammas
        .par_iter()
        .map(|&g| {
            let mut row = vec![Cell::Num(g)];
            for kind in [NoiseKind::Loss, NoiseKind::Thermalisation] {
                for (_, sq) in squeezings {
                    let s = family.scenario(k, g, g, *sq, Noise::Ideal);
                    row.push(value_or_null(depth(&s, kind, &d_opts).map(|d| d.critical_value)));
                }
            }
            row
        })
        .collect();
    for row in rows {
        table.push(row);
    }
    Ok(table)
}

const INITIAL_THERMAL_SQUEEZINGS: [(&str, Squeeze); 3] = [
    ("none", Squeeze::None),
    ("momentum_3db", MOMENTUM),
    ("momentum_6db", Squeeze::Momentum(2.0 * FACTOR_TWO_DB)),
];

fn initial_thermal(panel: &str, opts: &FigureOptions) -> Result<Table> {
    let k = panel_order(panel);
    let columns = std::iter::once("gamma".to_owned())
        .chain(INITIAL_THERMAL_SQUEEZINGS.iter().map(|(s, _)| format!("n0_max_{s}")));
    let mut table = base_table(FigureName::AppC, panel, opts, columns)
        .meta("k", k)
        .meta("lambda", "gamma")
        .meta("threshold", ThresholdPolicy::LocalSqueezed.as_str());
    let d_opts = fig_depth_options();
    for g in linspace(0.1, 4.0, opts.points.unwrap_or(100)) {
        let mut row = vec![Cell::Num(g)];
        for (_, sq) in INITIAL_THERMAL_SQUEEZINGS {
            let s = Scenario::hypergraph(k, g, g, sq, Noise::Ideal);
            row.push(value_or_null(depth(&s, NoiseKind::InitialThermal, &d_opts).map(|d| d.critical_value)));
        }
        table.push(row);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small() -> FigureOptions {
        FigureOptions { points: Some(9), kmax: 4, ..Default::default() }
    }

    #[test]
    fn names_round_trip() {
        for n in FigureName::ALL {
            assert_eq!(n.as_str().parse::<FigureName>().unwrap(), n);
        }
        assert!("fig9".parse::<FigureName>().is_err());
    }

    #[test]
    fn unknown_panel_is_rejected() {
        assert!(generate(FigureName::Fig1, Some("pentad"), &small()).is_err());
    }

    #[test]
    fn fig1_triad_schema_and_values() {
        let tables = generate(FigureName::Fig1, Some("triad"), &small()).unwrap();
        assert_eq!(tables.len(), 1);
        let (stem, t) = &tables[0];
        assert_eq!(stem, "fig1_triad");
        assert_eq!(
            &t.columns[..7],
            ["lambda", "var_pure_r0", "var_pure_3db", "var_loss", "var_thermal", "ground_thr", "squeezed_thr"]
        );
        // lambda = 1 is the fifth grid point of [-1, 3]
        let row = &t.rows[4];
        assert_eq!(row[0].as_f64(), Some(1.0));
        assert_abs_diff_eq!(row[1].as_f64().unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(row[2].as_f64().unwrap(), 0.25, epsilon = 1e-12);
        // at the depth the lossy and hot variances sit on the threshold
        assert_abs_diff_eq!(row[3].as_f64().unwrap(), 0.75, epsilon = 1e-8);
        assert_abs_diff_eq!(row[4].as_f64().unwrap(), 0.75, epsilon = 1e-8);
    }

    #[test]
    fn figure_output_is_deterministic() {
        let a = generate(FigureName::AppD, Some("triad"), &small()).unwrap();
        let b = generate(FigureName::AppD, Some("triad"), &small()).unwrap();
        assert_eq!(a[0].1.to_csv_string(), b[0].1.to_csv_string());
    }

    #[test]
    fn dyad_ordering_has_no_crossover() {
        let s = Scenario::hypergraph(2, 1.0, 1.0, Squeeze::None, Noise::Ideal);
        for noise in [Noise::Loss { transmittivity: FIXED_LOSS }, Noise::Thermal { nbar: FIXED_NBAR }] {
            assert!(variance_crossovers(&s, noise, MOMENTUM, Squeeze::None, (0.1, 5.0)).unwrap().is_empty());
            assert!(variance_crossovers(&s, noise, Squeeze::None, POSITION, (0.1, 5.0)).unwrap().is_empty());
        }
    }

    #[test]
    fn triad_momentum_none_crossover_regression() {
        let s = Scenario::hypergraph(3, 1.0, 1.0, Squeeze::None, Noise::Ideal);
        let x = variance_crossovers(&s, Noise::Loss { transmittivity: FIXED_LOSS }, MOMENTUM, Squeeze::None, (0.1, 5.0))
            .unwrap();
        assert_eq!(x.len(), 1);
        assert_abs_diff_eq!(x[0], 1.772_555_650_268, epsilon = 1e-9);
    }

    #[test]
    fn initial_thermal_grows_with_gamma_and_squeezing() {
        let t = generate(FigureName::AppC, None, &small()).unwrap().remove(0).1;
        let none = t.numbers("n0_max_none").unwrap();
        let six = t.numbers("n0_max_momentum_6db").unwrap();
        let defined: Vec<f64> = none.iter().flatten().copied().collect();
        assert!(defined.len() > 2);
        assert!(defined.windows(2).all(|w| w[1] > w[0]));
        for (a, b) in none.iter().zip(&six) {
            if let Some(a) = a {
                assert!(b.unwrap() > *a);
            }
        }
    }
}
