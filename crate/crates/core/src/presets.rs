//! Reference channels used throughout the tests, the acceptance suite and
//! the shipped config files.

use crate::density::{DensityModel, Prior};
use crate::likelihood::ChannelSpec;

/// Equal-variance antipodal Gaussians: `N(-1, 1)` vs `N(1, 1)`, uniform prior.
pub fn example1() -> ChannelSpec {
    ChannelSpec::new(
        Prior::uniform(),
        DensityModel::gaussian(-1.0, 1.0).unwrap(),
        DensityModel::gaussian(1.0, 1.0).unwrap(),
    )
}

/// Unequal noise: `N(-1, sqrt 5)` vs `N(1, 1)`, uniform prior. The optimal
/// quantizer needs two thresholds.
pub fn example2() -> ChannelSpec {
    example2_with_prior(Prior::uniform())
}

pub fn example2_with_prior(prior: Prior) -> ChannelSpec {
    ChannelSpec::new(
        prior,
        DensityModel::gaussian(-1.0, 5f64.sqrt()).unwrap(),
        DensityModel::gaussian(1.0, 1.0).unwrap(),
    )
}

/// Three-component mixture against a broad Gaussian:
/// `0.3 N(0, sqrt .3) + 0.4 N(-3, sqrt .2) + 0.3 N(3, sqrt .1)` vs `N(-2, 3)`.
pub fn fig5() -> ChannelSpec {
    ChannelSpec::new(
        Prior::uniform(),
        DensityModel::mixture(&[
            (0.0, 0.3f64.sqrt(), 0.3),
            (-3.0, 0.2f64.sqrt(), 0.4),
            (3.0, 0.1f64.sqrt(), 0.3),
        ])
        .unwrap(),
        DensityModel::gaussian(-2.0, 3.0).unwrap(),
    )
}

/// Both inputs produce `N(0, 1)`: the output carries no information.
pub fn identical() -> ChannelSpec {
    ChannelSpec::new(
        Prior::uniform(),
        DensityModel::gaussian(0.0, 1.0).unwrap(),
        DensityModel::gaussian(0.0, 1.0).unwrap(),
    )
}
