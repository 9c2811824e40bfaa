//! The 2x2 channel `X -> Z` induced by a quantizer, its mutual information,
//! and the level-`a` functionals `f(a) = P(Z=0|X=0)`, `g(a) = P(Z=1|X=1)`.
//!
//! Two stationarity functions of `a` are provided:
//!
//! * [`StationarityForm::Corrected`] is `-dI/da` divided by the positive
//!   factor `p0 f'(a) / ln 2`:
//!   `K(a) = (a/(1-a)) logit g + logit(q0)/(1-a) - logit f`, with
//!   `q0 = p0 f + p1 (1 - g)`. It uses `g'(a) = -(a p0 / ((1-a) p1)) f'(a)`,
//!   which follows from `phi1(h) = a p0 / ((1-a) p1) phi0(h)` at every
//!   threshold. `K < 0` while `I(X;Z)_a` increases, so its zero is the
//!   maximiser.
//! * [`StationarityForm::Reciprocal`] is the closed form
//!   `logit f + (p1^2 (a-1) / (p0^2 a)) logit g - ((p0^2 a + p1^2 (1-a)) / (p0^2 a)) logit q0`,
//!   obtained with the reciprocal derivative factor `f' = -(a p0/((1-a) p1)) g'`.
//!   It is usually non-decreasing in `a` (not always: it can turn down just
//!   before the level set empties), and its zero does not coincide with the
//!   maximiser unless the channel is symmetric (e.g. `p0 = p1` and `f = g`
//!   at `a = 1/2`).

use serde::{Deserialize, Serialize};

use crate::density::Prior;
use crate::error::{Error, Result};
use crate::likelihood::{check_level, find_level_set, ChannelSpec, DEFAULT_GRID_POINTS};
use crate::thresholds::{Mapping, ThresholdVector};

/// Clamp band: `f` or `g` this close to 0 or 1 makes the logs unbounded.
pub const DEGENERACY_EPS: f64 = 1e-12;

/// Diagonal of the 2x2 transition matrix; off-diagonals are implied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelMatrix {
    /// `P(Z=0 | X=0)`
    pub a11: f64,
    /// `P(Z=1 | X=1)`
    pub a22: f64,
}

impl ChannelMatrix {
    pub fn new(a11: f64, a22: f64) -> Self {
        Self {
            a11: a11.clamp(0.0, 1.0),
            a22: a22.clamp(0.0, 1.0),
        }
    }
}

pub fn channel_matrix(spec: &ChannelSpec, h: &ThresholdVector, mapping: Mapping) -> ChannelMatrix {
    ChannelMatrix::new(
        spec.phi0().partition_mass(h, mapping.zero_parity()),
        spec.phi1().partition_mass(h, mapping.one_parity()),
    )
}

/// Binary entropy in bits, `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

/// `I(X;Z)` in bits for the given prior and channel.
pub fn mutual_information(prior: Prior, cm: ChannelMatrix) -> f64 {
    let (p0, p1) = (prior.p0(), prior.p1());
    let q0 = p0 * cm.a11 + p1 * (1.0 - cm.a22);
    let mi = binary_entropy(q0) - p0 * binary_entropy(cm.a11) - p1 * binary_entropy(cm.a22);
    mi.max(0.0)
}

/// `f`, `g` and the quantizer induced by level `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFunctionals {
    pub a: f64,
    pub f: f64,
    pub g: f64,
    /// Boundaries between `H_a = {u < a}` and its complement.
    pub roots: ThresholdVector,
    /// Parity of the segments forming `H_a` (mapped to `Z = 0`).
    pub mapping: Mapping,
    /// Number of tangency spans reported by the level-set scan.
    pub tangencies: usize,
}

impl ChannelFunctionals {
    pub fn channel(&self) -> ChannelMatrix {
        ChannelMatrix::new(self.f, self.g)
    }

    pub fn is_degenerate(&self) -> bool {
        is_degenerate(self.f) || is_degenerate(self.g)
    }
}

fn is_degenerate(x: f64) -> bool {
    x <= DEGENERACY_EPS || x >= 1.0 - DEGENERACY_EPS
}

/// Probe point for segment `(lo, hi)`, replacing infinite ends with the
/// search-domain edges.
fn probe(spec: &ChannelSpec, lo: f64, hi: f64) -> f64 {
    let lo = if lo.is_finite() {
        lo
    } else {
        spec.search_lo().min(hi)
    };
    let hi = if hi.is_finite() {
        hi
    } else {
        spec.search_hi().max(lo)
    };
    0.5 * (lo + hi)
}

pub fn functionals(spec: &ChannelSpec, a: f64) -> Result<ChannelFunctionals> {
    functionals_with_grid(spec, a, DEFAULT_GRID_POINTS)
}

pub fn functionals_with_grid(
    spec: &ChannelSpec,
    a: f64,
    grid_points: usize,
) -> Result<ChannelFunctionals> {
    let level = find_level_set(spec, a, grid_points)?;
    let roots = level.roots;

    // label each segment by u at its probe point; H_a -> Z = 0
    let labels: Vec<bool> = roots
        .segments()
        .map(|(lo, hi)| spec.posterior_a(probe(spec, lo, hi)) < a)
        .collect();

    // drop boundaries between equally labelled segments
    let edges = roots.as_slice();
    let kept: Vec<f64> = (0..edges.len())
        .filter(|&i| labels[i] != labels[i + 1])
        .map(|i| edges[i])
        .collect();
    let mapping = if labels[0] {
        Mapping::OddToZero
    } else {
        Mapping::EvenToZero
    };
    let thresholds = ThresholdVector::new(kept)?;
    let cm = channel_matrix(spec, &thresholds, mapping);

    Ok(ChannelFunctionals {
        a,
        f: cm.a11,
        g: cm.a22,
        roots: thresholds,
        mapping,
        tangencies: level.tangencies.len(),
    })
}

fn logit(x: f64) -> f64 {
    (x / (1.0 - x)).ln()
}

/// Which stationarity function the solver bisects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationarityForm {
    #[default]
    Corrected,
    Reciprocal,
}

impl StationarityForm {
    pub fn name(self) -> &'static str {
        match self {
            StationarityForm::Corrected => "corrected",
            StationarityForm::Reciprocal => "reciprocal",
        }
    }

    /// Evaluate from precomputed `f(a)`, `g(a)`. Natural logs.
    pub fn evaluate(self, prior: Prior, a: f64, f: f64, g: f64) -> Result<f64> {
        check_level(a)?;
        if is_degenerate(f) || is_degenerate(g) {
            return Err(Error::DegenerateChannel { a, f, g });
        }
        let (p0, p1) = (prior.p0(), prior.p1());
        let q0 = p0 * f + p1 * (1.0 - g);
        let log_q = (q0 / (p0 * (1.0 - f) + p1 * g)).ln();
        Ok(match self {
            StationarityForm::Corrected => {
                (a / (1.0 - a)) * logit(g) + log_q / (1.0 - a) - logit(f)
            }
            StationarityForm::Reciprocal => {
                let d = p0 * p0 * a;
                logit(f) + (p1 * p1 * (a - 1.0) / d) * logit(g)
                    - ((d + p1 * p1 * (1.0 - a)) / d) * log_q
            }
        })
    }
}

impl std::str::FromStr for StationarityForm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "corrected" => Ok(StationarityForm::Corrected),
            "reciprocal" => Ok(StationarityForm::Reciprocal),
            other => Err(format!(
                "unknown stationarity form '{other}' (corrected|reciprocal)"
            )),
        }
    }
}

/// Stationarity function of the given form at level `a`.
pub fn stationarity(
    spec: &ChannelSpec,
    a: f64,
    form: StationarityForm,
    grid_points: usize,
) -> Result<f64> {
    let fun = functionals_with_grid(spec, a, grid_points)?;
    form.evaluate(spec.prior(), a, fun.f, fun.g)
}

/// The reciprocal-form `F(a)` on the default grid.
#[allow(non_snake_case)]
pub fn stationarity_F(spec: &ChannelSpec, a: f64) -> Result<f64> {
    stationarity(spec, a, StationarityForm::Reciprocal, DEFAULT_GRID_POINTS)
}
