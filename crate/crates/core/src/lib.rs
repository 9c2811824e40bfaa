//! Mutual-information-maximizing binary quantizers for channels with a
//! binary input and a continuous output.
//!
//! The channel is described by a prior `(p0, p1)` and two Gaussian-mixture
//! conditional densities. Every optimal quantizer thresholds the posterior
//! `u(y) = p1 phi1(y) / (p0 phi0(y) + p1 phi1(y))` at a single level `a*`,
//! taking *all* crossings of `u(y) = a*` as thresholds. [`solve`] finds `a*`
//! by bisection on a stationarity function of `a`; the [`oracle`] module
//! certifies the result by brute force.
//!
//! ```
//! use binquant::{presets, solve, SolverConfig};
//!
//! let design = solve(&presets::example2(), &SolverConfig::default()).unwrap();
//! assert_eq!(design.thresholds.len(), 2);
//! assert!(design.stationarity_residual < 1e-6);
//! ```

pub mod channel;
pub mod config;
pub mod density;
pub mod error;
pub mod likelihood;
pub mod oracle;
pub mod presets;
pub mod solver;
pub mod thresholds;

pub use channel::{
    binary_entropy, channel_matrix, functionals, mutual_information, stationarity, stationarity_F,
    ChannelFunctionals, ChannelMatrix, StationarityForm,
};
pub use config::RunConfig;
pub use density::{DensityModel, GaussianComponent, Prior};
pub use error::{Error, Result};
pub use likelihood::{
    check_log_concavity_shift, classify_monotonicity, find_level_set, ChannelSpec, LevelSet,
    Monotonicity, MonotonicityClass, ShiftVerdict,
};
pub use oracle::{
    grid_search, lemma_checks, sweep_a, sweep_a_with_grid, LemmaCheck, LemmaReport, OracleResult,
    SweepRow,
};
pub use solver::{
    predict_single_threshold, predict_single_threshold_with_grid, solve, solve_from_bracket,
    verify_stationarity, QuantizerDesign, SolverConfig, StationarityReport,
};
pub use thresholds::{Mapping, Parity, ThresholdVector};
