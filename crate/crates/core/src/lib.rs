//! Nullifier variances of continuous-variable hypergraph states under noise,
//! nonclassicality thresholds and the noise depths at which they are lost.
//!
//! ```
//! use hypernull_core::{variance, Noise, Scenario, Squeeze};
//!
//! let s = Scenario::hypergraph(3, 1.0, 1.0, Squeeze::None, Noise::Ideal);
//! assert!((variance(&s).unwrap().value - 0.5).abs() < 1e-15);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closed_forms;
pub mod constants;
pub mod criteria;
pub mod depth;
pub mod error;
pub mod evaluate;
pub mod figures;
pub mod fock;
pub mod mc;
pub mod moments;
pub mod scenario;
pub mod search;
pub mod selfcheck;
pub mod sweep;
pub mod table;

pub use closed_forms::LambdaQuadratic;
pub use constants::{DEFAULT_SEED, FACTOR_TWO_DB, VACUUM_VARIANCE};
pub use criteria::{
    classify, criterion_margin, ground_threshold, squeezed_threshold, threshold, Classification,
    NonclassicalityClass, Threshold, ThresholdPolicy,
};
pub use depth::{
    depth, min_over_lambda, optimize_gamma_for_depth, optimize_squeezing, DepthOptions, DepthResult,
    GammaOptimum, LambdaPolicy, NoiseKind, SqueezeObjective,
};
pub use error::{Error, Result};
pub use evaluate::{lambda_quadratic, sampled_variance, variance, variance_via, Method, Route, VarianceResult};
pub use mc::{mc_variance, McResult};
pub use moments::{expr_mean, expr_variance, GaussianVar, Monomial, QuadExpr, VarAllocator, VarId};
pub use scenario::{squeeze_param, Noise, PhaseSpec, Scenario, ScenarioSpec, Squeeze};
pub use figures::{generate, FigureName, FigureOptions};
pub use fock::{perturbative_gamma_range, perturbative_min_gap, perturbative_nullifier_variance};
pub use selfcheck::{Report, SelfcheckConfig};
pub use sweep::{sweep, Quantity, Scale, SweepAxis, SweepGrid, SweepOptions};
pub use table::{Cell, Format, Table};
