//! JSON run configuration.
//!
//! ```json
//! {
//!   "prior":  { "p0": 0.5 },
//!   "phi0":   { "components": [ { "mean": -1.0, "stddev": 1.0, "weight": 1.0 } ] },
//!   "phi1":   { "components": [ { "mean":  1.0, "stddev": 1.0, "weight": 1.0 } ] },
//!   "search": { "lo": -12.0, "hi": 12.0 },
//!   "solver": { "tol_a": 1e-10, "stationarity": "corrected" }
//! }
//! ```
//!
//! `search` and `solver` are optional; every `solver` field is optional.

use std::path::Path;

use serde::Deserialize;

use crate::density::{DensityModel, Prior};
use crate::error::{Error, Result};
use crate::likelihood::ChannelSpec;
use crate::solver::SolverConfig;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSearch {
    lo: f64,
    hi: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRunConfig {
    prior: Prior,
    phi0: DensityModel,
    phi1: DensityModel,
    #[serde(default)]
    search: Option<RawSearch>,
    #[serde(default)]
    solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub channel: ChannelSpec,
    pub solver: SolverConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawRunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut channel = ChannelSpec::new(raw.prior, raw.phi0, raw.phi1);
        if let Some(s) = raw.search {
            channel = channel
                .with_search_domain(s.lo, s.hi)
                .map_err(|e| Error::Config(format!("field `search`: {e}")))?;
        }
        raw.solver
            .validate()
            .map_err(|e| Error::Config(format!("field `solver`: {e}")))?;
        Ok(Self {
            channel,
            solver: raw.solver,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}
