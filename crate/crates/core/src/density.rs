//! Gaussian-mixture conditional densities with closed-form interval masses.
//!
//! Every probability mass in the crate goes through [`DensityModel::interval_mass`],
//! which uses the complementary error function and picks the tail that avoids
//! cancellation. Infinite bounds are handled as CDF limits.

use std::f64::consts::{PI, SQRT_2};

use libm::erfc;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thresholds::{Parity, ThresholdVector};

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Upper tail `P(N(0,1) > z)`.
fn upper_tail(z: f64) -> f64 {
    if z == f64::INFINITY {
        0.0
    } else if z == f64::NEG_INFINITY {
        1.0
    } else {
        0.5 * erfc(z / SQRT_2)
    }
}

/// Lower tail `P(N(0,1) < z)`.
fn lower_tail(z: f64) -> f64 {
    upper_tail(-z)
}

/// One weighted normal component. `stddev` is a standard deviation, not a
/// variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub mean: f64,
    pub stddev: f64,
    pub weight: f64,
}

impl GaussianComponent {
    pub fn new(mean: f64, stddev: f64, weight: f64) -> Result<Self> {
        let c = Self {
            mean,
            stddev,
            weight,
        };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if !self.mean.is_finite() {
            return Err(Error::InvalidComponent(format!(
                "mean {} is not finite",
                self.mean
            )));
        }
        if !(self.stddev.is_finite() && self.stddev > 0.0) {
            return Err(Error::InvalidComponent(format!(
                "stddev {} must be > 0",
                self.stddev
            )));
        }
        if !(self.weight > 0.0 && self.weight <= 1.0) {
            return Err(Error::InvalidComponent(format!(
                "weight {} must lie in (0, 1]",
                self.weight
            )));
        }
        Ok(())
    }

    fn ln_pdf(&self, y: f64) -> f64 {
        let z = (y - self.mean) / self.stddev;
        self.weight.ln() - self.stddev.ln() - 0.5 * (2.0 * PI).ln() - 0.5 * z * z
    }

    fn pdf(&self, y: f64) -> f64 {
        let z = (y - self.mean) / self.stddev;
        self.weight * (-0.5 * z * z).exp() / (self.stddev * (2.0 * PI).sqrt())
    }

    /// Unweighted mass of `[lo, hi)`.
    fn unit_mass(&self, lo: f64, hi: f64) -> f64 {
        let zl = (lo - self.mean) / self.stddev;
        let zh = (hi - self.mean) / self.stddev;
        let m = if zl >= 0.0 {
            upper_tail(zl) - upper_tail(zh)
        } else if zh <= 0.0 {
            lower_tail(zh) - lower_tail(zl)
        } else {
            1.0 - lower_tail(zl) - upper_tail(zh)
        };
        m.max(0.0)
    }
}

/// Finite Gaussian mixture `sum_k w_k N(mean_k, stddev_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDensity", into = "RawDensity")]
pub struct DensityModel {
    components: Vec<GaussianComponent>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDensity {
    components: Vec<GaussianComponent>,
}

impl TryFrom<RawDensity> for DensityModel {
    type Error = Error;

    fn try_from(raw: RawDensity) -> Result<Self> {
        Self::new(raw.components)
    }
}

impl From<DensityModel> for RawDensity {
    fn from(m: DensityModel) -> Self {
        RawDensity {
            components: m.components,
        }
    }
}

impl DensityModel {
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidDensity("mixture has no components".into()));
        }
        for c in &components {
            c.validate()?;
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidDensity(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { components })
    }

    /// Single normal density.
    pub fn gaussian(mean: f64, stddev: f64) -> Result<Self> {
        Self::new(vec![GaussianComponent::new(mean, stddev, 1.0)?])
    }

    /// Build from `(mean, stddev, weight)` triples.
    pub fn mixture(parts: &[(f64, f64, f64)]) -> Result<Self> {
        let comps = parts
            .iter()
            .map(|&(m, s, w)| GaussianComponent::new(m, s, w))
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.mean).sum()
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.components.iter().map(|c| c.pdf(y)).sum()
    }

    /// Natural log of the pdf via log-sum-exp; stays finite far into the
    /// tails where `pdf` underflows.
    pub fn ln_pdf(&self, y: f64) -> f64 {
        let mut max = f64::NEG_INFINITY;
        for c in &self.components {
            max = max.max(c.ln_pdf(y));
        }
        if max == f64::NEG_INFINITY {
            return max;
        }
        let s: f64 = self
            .components
            .iter()
            .map(|c| (c.ln_pdf(y) - max).exp())
            .sum();
        max + s.ln()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * c.unit_mass(f64::NEG_INFINITY, y))
            .sum()
    }

    /// Probability mass of `[lo, hi)`; either bound may be infinite.
    pub fn interval_mass(&self, lo: f64, hi: f64) -> Result<f64> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        if lo == hi {
            return Ok(0.0);
        }
        let m: f64 = self
            .components
            .iter()
            .map(|c| c.weight * c.unit_mass(lo, hi))
            .sum();
        Ok(m.clamp(0.0, 1.0))
    }

    /// Total mass of the segments of `thresholds` with the given parity.
    pub fn partition_mass(&self, thresholds: &ThresholdVector, parity: Parity) -> f64 {
        thresholds
            .segments()
            .enumerate()
            .filter(|(k, _)| parity.contains(*k))
            .map(|(_, (lo, hi))| {
                self.interval_mass(lo, hi)
                    .expect("threshold segments are ordered")
            })
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    /// Like [`partition_mass`](Self::partition_mass) but for raw, unchecked
    /// thresholds.
    pub fn partition_mass_checked(&self, thresholds: &[f64], parity: Parity) -> Result<f64> {
        let h = ThresholdVector::new(thresholds.to_vec())?;
        Ok(self.partition_mass(&h, parity))
    }
}

/// Input distribution `(p0, p1)`; only `p0` is stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPrior", into = "RawPrior")]
pub struct Prior {
    p0: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrior {
    p0: f64,
}

impl TryFrom<RawPrior> for Prior {
    type Error = Error;

    fn try_from(raw: RawPrior) -> Result<Self> {
        Self::new(raw.p0)
    }
}

impl From<Prior> for RawPrior {
    fn from(p: Prior) -> Self {
        RawPrior { p0: p.p0 }
    }
}

impl Prior {
    pub fn new(p0: f64) -> Result<Self> {
        if p0 > 0.0 && p0 < 1.0 {
            Ok(Self { p0 })
        } else {
            Err(Error::InvalidPrior(p0))
        }
    }

    pub fn uniform() -> Self {
        Self { p0: 0.5 }
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn p1(&self) -> f64 {
        1.0 - self.p0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn fig5_phi0() -> DensityModel {
        DensityModel::mixture(&[
            (0.0, 0.3f64.sqrt(), 0.3),
            (-3.0, 0.2f64.sqrt(), 0.4),
            (3.0, 0.1f64.sqrt(), 0.3),
        ])
        .unwrap()
    }

    #[test]
    fn pdf_standard_normal_peak() {
        let n = DensityModel::gaussian(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(n.pdf(0.0), 0.3989422804014327, epsilon = 1e-15);
        let shifted = DensityModel::gaussian(-1.0, 1.0).unwrap();
        assert_abs_diff_eq!(shifted.pdf(-1.0), 0.3989422804014327, epsilon = 1e-15);
    }

    #[test]
    fn pdf_mixture_at_minus_three() {
        // 40-digit evaluation: 0.35682489007317425865...
        assert_abs_diff_eq!(
            fig5_phi0().pdf(-3.0),
            0.356_824_890_073_174_26,
            epsilon = 1e-14
        );
    }

    #[test]
    fn ln_pdf_matches_pdf_and_survives_tails() {
        let m = fig5_phi0();
        for y in [-4.0, -1.0, 0.3, 2.9] {
            assert_abs_diff_eq!(m.ln_pdf(y), m.pdf(y).ln(), epsilon = 1e-12);
        }
        assert!(m.pdf(60.0) == 0.0);
        assert!(m.ln_pdf(60.0).is_finite());
    }

    #[test]
    fn interval_mass_examples() {
        let n = DensityModel::gaussian(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(
            n.interval_mass(f64::NEG_INFINITY, 0.0).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        let n1 = DensityModel::gaussian(1.0, 1.0).unwrap();
        // Phi(2.5374), 40-digit reference
        assert_abs_diff_eq!(
            n1.interval_mass(f64::NEG_INFINITY, 3.5374).unwrap(),
            0.994_416_036_543_472_6,
            epsilon = 1e-14
        );
        assert_eq!(n1.interval_mass(0.7, 0.7).unwrap(), 0.0);
        assert_abs_diff_eq!(
            fig5_phi0()
                .interval_mass(f64::NEG_INFINITY, f64::INFINITY)
                .unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn interval_mass_rejects_reversed() {
        let n = DensityModel::gaussian(0.0, 1.0).unwrap();
        assert!(matches!(
            n.interval_mass(1.0, 0.0),
            Err(Error::InvalidInterval { .. })
        ));
        assert!(n.interval_mass(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn partition_mass_examples() {
        let n = DensityModel::gaussian(0.0, 1.0).unwrap();
        let h0 = ThresholdVector::new(vec![0.0]).unwrap();
        assert_abs_diff_eq!(n.partition_mass(&h0, Parity::Odd), 0.5, epsilon = 1e-15);

        let h = ThresholdVector::new(vec![-0.5374, 3.5374]).unwrap();
        let phi0 = DensityModel::gaussian(-1.0, 5f64.sqrt()).unwrap();
        let phi1 = DensityModel::gaussian(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(
            phi0.partition_mass(&h, Parity::Odd),
            0.603_168_231_165_041_4,
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(
            phi1.partition_mass(&h, Parity::Even),
            0.932_318_343_348_957_4,
            epsilon = 1e-13
        );
        assert!(phi0
            .partition_mass_checked(&[1.0, 1.0], Parity::Odd)
            .is_err());
    }

    #[test]
    fn model_validation() {
        assert!(DensityModel::new(vec![]).is_err());
        assert!(GaussianComponent::new(0.0, 0.0, 1.0).is_err());
        assert!(GaussianComponent::new(0.0, -1.0, 1.0).is_err());
        assert!(GaussianComponent::new(0.0, 1.0, 0.0).is_err());
        assert!(GaussianComponent::new(0.0, 1.0, 1.5).is_err());
        assert!(DensityModel::mixture(&[(0.0, 1.0, 0.5), (1.0, 1.0, 0.4)]).is_err());
        assert!(Prior::new(0.0).is_err());
        assert!(Prior::new(1.0).is_err());
        assert_eq!(Prior::new(0.3).unwrap().p1(), 1.0 - 0.3);
    }

    #[test]
    fn serde_validates() {
        let m: DensityModel =
            serde_json::from_str(r#"{"components":[{"mean":0,"stddev":1,"weight":1}]}"#).unwrap();
        assert_eq!(m, DensityModel::gaussian(0.0, 1.0).unwrap());
        assert!(serde_json::from_str::<DensityModel>(
            r#"{"components":[{"mean":0,"stddev":-1,"weight":1}]}"#
        )
        .is_err());
        assert!(serde_json::from_str::<Prior>(r#"{"p0": 1.0}"#).is_err());
    }

    fn arb_model() -> impl Strategy<Value = DensityModel> {
        prop::collection::vec((-5.0f64..5.0, 0.1f64..4.0, 0.05f64..1.0), 1..4).prop_map(|raw| {
            let total: f64 = raw.iter().map(|r| r.2).sum();
            let comps = raw
                .iter()
                .map(|&(m, s, w)| GaussianComponent {
                    mean: m,
                    stddev: s,
                    weight: w / total,
                })
                .collect::<Vec<_>>();
            // renormalise exactly on the last component
            let mut comps = comps;
            let head: f64 = comps[..comps.len() - 1].iter().map(|c| c.weight).sum();
            let last = comps.len() - 1;
            comps[last].weight = 1.0 - head;
            DensityModel::new(comps).unwrap()
        })
    }

    proptest! {
        #[test]
        fn total_mass_is_one(m in arb_model()) {
            let t = m.interval_mass(f64::NEG_INFINITY, f64::INFINITY).unwrap();
            prop_assert!((t - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn additive_and_monotone(m in arb_model(), mut pts in prop::collection::vec(-12.0f64..12.0, 3)) {
            pts.sort_by(f64::total_cmp);
            let (a, b, c) = (pts[0], pts[1], pts[2]);
            let ab = m.interval_mass(a, b).unwrap();
            let bc = m.interval_mass(b, c).unwrap();
            let ac = m.interval_mass(a, c).unwrap();
            prop_assert!((ab + bc - ac).abs() <= 1e-12);
            prop_assert!(ab <= ac + 1e-15);
        }

        #[test]
        fn parities_sum_to_one(m in arb_model(), mut h in prop::collection::vec(-10.0f64..10.0, 0..6)) {
            h.sort_by(f64::total_cmp);
            h.dedup();
            let h = ThresholdVector::new(h).unwrap();
            let s = m.partition_mass(&h, Parity::Odd) + m.partition_mass(&h, Parity::Even);
            prop_assert!((s - 1.0).abs() <= 1e-12);
        }
    }
}
