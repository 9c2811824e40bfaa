//! Bisection on the stationarity function over the posterior level `a`,
//! followed by extraction of every level-set crossing at the root.
//!
//! The number of thresholds is not searched over: it is however many times
//! `u(y)` crosses `a*`.

use serde::{Deserialize, Serialize};

use crate::channel::{
    functionals_with_grid, mutual_information, ChannelFunctionals, ChannelMatrix, StationarityForm,
};
use crate::error::{Error, Result};
use crate::likelihood::{
    check_log_concavity_shift, classify_monotonicity, ChannelSpec, DEFAULT_GRID_POINTS,
};
use crate::thresholds::{Mapping, ThresholdVector};

/// Points in the coarse bracket-discovery scan over `[a_lo, a_hi]`.
pub const BRACKET_SCAN_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub a_lo: f64,
    pub a_hi: f64,
    pub tol_a: f64,
    pub max_iter: usize,
    pub grid_points: usize,
    pub stationarity: StationarityForm,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            a_lo: 1e-6,
            a_hi: 1.0 - 1e-6,
            tol_a: 1e-10,
            max_iter: 200,
            grid_points: DEFAULT_GRID_POINTS,
            stationarity: StationarityForm::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSolverConfig(m));
        if !(self.a_lo > 0.0 && self.a_lo < self.a_hi && self.a_hi < 1.0) {
            return bad(format!(
                "need 0 < a_lo < a_hi < 1, got [{}, {}]",
                self.a_lo, self.a_hi
            ));
        }
        if self.tol_a.is_nan() || self.tol_a <= 0.0 {
            return bad(format!("tol_a must be > 0, got {}", self.tol_a));
        }
        if self.max_iter < 1 {
            return bad("max_iter must be >= 1".into());
        }
        if self.grid_points < crate::likelihood::MIN_GRID_POINTS {
            return bad(format!(
                "grid_points must be >= 64, got {}",
                self.grid_points
            ));
        }
        Ok(())
    }
}

/// A solved quantizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizerDesign {
    pub a_star: f64,
    pub r_star: f64,
    pub thresholds: ThresholdVector,
    pub mapping: Mapping,
    pub channel: ChannelMatrix,
    pub mi_bits: f64,
    /// `max_i |r(h_i) - r*| / r*`.
    pub stationarity_residual: f64,
    pub iterations: usize,
    pub stationarity: StationarityForm,
    pub warnings: Vec<String>,
}

fn evaluate(spec: &ChannelSpec, cfg: &SolverConfig, a: f64) -> Result<f64> {
    let fun = functionals_with_grid(spec, a, cfg.grid_points)?;
    cfg.stationarity.evaluate(spec.prior(), a, fun.f, fun.g)
}

fn no_information_diagnosis(spec: &ChannelSpec, cfg: &SolverConfig) -> Option<String> {
    let class = classify_monotonicity(spec, cfg.grid_points).ok()?;
    class.flat.then(|| {
        "channel carries no information: phi0 and phi1 coincide on the search domain, so I(X;Z) = 0 for every quantizer".to_string()
    })
}

/// Find `a*` and build the design.
pub fn solve(spec: &ChannelSpec, cfg: &SolverConfig) -> Result<QuantizerDesign> {
    cfg.validate()?;
    if let Some(diagnosis) = no_information_diagnosis(spec, cfg) {
        return Err(Error::NoSignChange { diagnosis });
    }

    let n = BRACKET_SCAN_POINTS;
    let step = (cfg.a_hi - cfg.a_lo) / (n - 1) as f64;
    let mut scan: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut last_degenerate = None;
    for k in 0..n {
        let a = if k == n - 1 {
            cfg.a_hi
        } else {
            cfg.a_lo + k as f64 * step
        };
        match evaluate(spec, cfg, a) {
            Ok(v) => scan.push((a, v)),
            Err(e @ Error::DegenerateChannel { .. }) => last_degenerate = Some(e),
            Err(e) => return Err(e),
        }
    }
    if scan.is_empty() {
        return Err(last_degenerate.unwrap_or(Error::NoSignChange {
            diagnosis: "no admissible level in the scan".into(),
        }));
    }

    let mut warnings = Vec::new();
    if let Some(&(a, _)) = scan.iter().find(|(_, v)| *v == 0.0) {
        return finish(spec, cfg, a, 0, &mut warnings);
    }

    let cells: Vec<usize> = (0..scan.len().saturating_sub(1))
        .filter(|&i| scan[i].1.signum() != scan[i + 1].1.signum())
        .collect();
    let cell = match cells.as_slice() {
        [] => {
            let sign = if scan[0].1 > 0.0 {
                "positive"
            } else {
                "negative"
            };
            return Err(Error::NoSignChange {
                diagnosis: format!(
                    "{} stationarity function is {sign} on every admissible level in [{}, {}] ({} of {n} scan points admissible)",
                    cfg.stationarity.name(),
                    scan[0].0,
                    scan[scan.len() - 1].0,
                    scan.len()
                ),
            });
        }
        [only] => *only,
        many => {
            let best = *many
                .iter()
                .max_by(|&&i, &&j| {
                    let si = (scan[i + 1].1 - scan[i].1).abs();
                    let sj = (scan[j + 1].1 - scan[j].1).abs();
                    si.total_cmp(&sj).then(j.cmp(&i))
                })
                .expect("non-empty");
            warnings.push(format!(
                "{} sign-change cells in the bracket scan; using [{}, {}] with the largest spread",
                many.len(),
                scan[best].0,
                scan[best + 1].0
            ));
            best
        }
    };

    let (a_star, iterations) = bisect(spec, cfg, scan[cell], scan[cell + 1])?;
    finish(spec, cfg, a_star, iterations, &mut warnings)
}

/// Bisection from a caller-supplied bracket whose stationarity values have
/// opposite signs. Used to check that every valid bracket converges to the
/// same root.
pub fn solve_from_bracket(
    spec: &ChannelSpec,
    cfg: &SolverConfig,
    lo: f64,
    hi: f64,
) -> Result<QuantizerDesign> {
    cfg.validate()?;
    if !(lo > 0.0 && lo < hi && hi < 1.0) {
        return Err(Error::InvalidBracket {
            lo,
            hi,
            reason: "need 0 < lo < hi < 1".into(),
        });
    }
    let flo = evaluate(spec, cfg, lo)?;
    let fhi = evaluate(spec, cfg, hi)?;
    if flo.signum() == fhi.signum() {
        return Err(Error::InvalidBracket {
            lo,
            hi,
            reason: format!("no sign change ({flo} and {fhi})"),
        });
    }
    let (a_star, iterations) = bisect(spec, cfg, (lo, flo), (hi, fhi))?;
    finish(spec, cfg, a_star, iterations, &mut Vec::new())
}

fn bisect(
    spec: &ChannelSpec,
    cfg: &SolverConfig,
    lo: (f64, f64),
    hi: (f64, f64),
) -> Result<(f64, usize)> {
    let (mut lo, mut hi) = (lo, hi);
    let mut iterations = 0;
    while hi.0 - lo.0 > cfg.tol_a {
        if iterations >= cfg.max_iter {
            return Err(Error::NotConverged {
                max_iter: cfg.max_iter,
                width: hi.0 - lo.0,
            });
        }
        iterations += 1;
        let mid = 0.5 * (lo.0 + hi.0);
        let v = evaluate(spec, cfg, mid)?;
        if v == 0.0 {
            return Ok((mid, iterations));
        }
        if v.signum() == lo.1.signum() {
            lo = (mid, v);
        } else {
            hi = (mid, v);
        }
    }
    Ok((0.5 * (lo.0 + hi.0), iterations))
}

fn finish(
    spec: &ChannelSpec,
    cfg: &SolverConfig,
    a_star: f64,
    iterations: usize,
    warnings: &mut Vec<String>,
) -> Result<QuantizerDesign> {
    let fun: ChannelFunctionals = functionals_with_grid(spec, a_star, cfg.grid_points)?;
    if fun.tangencies > 0 {
        warnings.push(format!("{} tangency span(s) at a* ignored", fun.tangencies));
    }
    let channel = fun.channel();
    let r_star = spec.ratio_at_level(a_star);
    let residual = residual_of(spec, &fun.roots, r_star);
    Ok(QuantizerDesign {
        a_star,
        r_star,
        thresholds: fun.roots,
        mapping: fun.mapping,
        channel,
        mi_bits: mutual_information(spec.prior(), channel),
        stationarity_residual: residual,
        iterations,
        stationarity: cfg.stationarity,
        warnings: std::mem::take(warnings),
    })
}

fn residual_of(spec: &ChannelSpec, h: &ThresholdVector, r_star: f64) -> f64 {
    h.as_slice()
        .iter()
        .map(|&y| (spec.ratio(y) - r_star).abs() / r_star)
        .fold(0.0, f64::max)
}

/// Likelihood ratios at each threshold of a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub residual: f64,
    pub per_threshold: Vec<(f64, f64)>,
}

/// Recompute `r(h_i)` at every threshold and its worst relative deviation
/// from `r*`.
pub fn verify_stationarity(spec: &ChannelSpec, design: &QuantizerDesign) -> StationarityReport {
    let per_threshold: Vec<(f64, f64)> = design
        .thresholds
        .as_slice()
        .iter()
        .map(|&h| (h, spec.ratio(h)))
        .collect();
    StationarityReport {
        residual: residual_of(spec, &design.thresholds, design.r_star),
        per_threshold,
    }
}

/// Sufficient conditions for a single-threshold optimum: strictly monotone
/// `r(y)`, or translated densities with strictly log-concave or log-convex
/// shape. A channel with constant `r` predicts `false`.
pub fn predict_single_threshold(spec: &ChannelSpec) -> Result<bool> {
    predict_single_threshold_with_grid(spec, DEFAULT_GRID_POINTS)
}

pub fn predict_single_threshold_with_grid(spec: &ChannelSpec, grid_points: usize) -> Result<bool> {
    let class = classify_monotonicity(spec, grid_points)?;
    if class.is_strict() {
        return Ok(true);
    }
    if class.flat {
        // no information: there is no optimal threshold to predict
        return Ok(false);
    }
    let shift = check_log_concavity_shift(spec, grid_points)?;
    Ok(shift.shift_detected && (shift.log_concave || shift.log_convex))
}
