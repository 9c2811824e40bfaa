//! Thresholding vectors and the binary quantizer rule they define.
//!
//! A vector `h1 < h2 < ... < hn` splits the real line into `n + 1`
//! segments `(-inf, h1), [h1, h2), ..., [hn, +inf)`. Segments alternate
//! between the two output labels, so a quantizer is fully described by the
//! thresholds plus which parity of segment maps to `Z = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which alternating family of segments is selected.
///
/// Segments are counted from one: `Odd` selects the 1st, 3rd, 5th, ...
/// segment (starting with `(-inf, h1)`), `Even` the 2nd, 4th, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn other(self) -> Self {
        match self {
            Parity::Odd => Parity::Even,
            Parity::Even => Parity::Odd,
        }
    }

    /// Whether zero-based segment index `k` belongs to this parity.
    pub fn contains(self, k: usize) -> bool {
        match self {
            Parity::Odd => k.is_multiple_of(2),
            Parity::Even => k % 2 == 1,
        }
    }
}

/// Label assignment of a quantizer: which segments produce `Z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mapping {
    OddToZero,
    EvenToZero,
}

impl Mapping {
    pub const BOTH: [Mapping; 2] = [Mapping::OddToZero, Mapping::EvenToZero];

    /// Segments mapped to `Z = 0`.
    pub fn zero_parity(self) -> Parity {
        match self {
            Mapping::OddToZero => Parity::Odd,
            Mapping::EvenToZero => Parity::Even,
        }
    }

    /// Segments mapped to `Z = 1`.
    pub fn one_parity(self) -> Parity {
        self.zero_parity().other()
    }
}

/// Strictly increasing, finite sequence of thresholds. May be empty, in
/// which case the quantizer is constant.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ThresholdVector(Vec<f64>);

impl ThresholdVector {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        let finite = thresholds.iter().all(|h| h.is_finite());
        let increasing = thresholds.windows(2).all(|w| w[0] < w[1]);
        if finite && increasing {
            Ok(Self(thresholds))
        } else {
            Err(Error::InvalidThresholds(thresholds))
        }
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn num_segments(&self) -> usize {
        self.0.len() + 1
    }

    /// Segment `k` as `(lo, hi)` with infinite outer bounds.
    pub fn segment(&self, k: usize) -> (f64, f64) {
        let lo = if k == 0 {
            f64::NEG_INFINITY
        } else {
            self.0[k - 1]
        };
        let hi = self.0.get(k).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }

    pub fn segments(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.num_segments()).map(move |k| self.segment(k))
    }

    /// Zero-based index of the segment containing `y`. Segments are closed
    /// on the left, so `y == h_i` falls into segment `i`.
    pub fn segment_of(&self, y: f64) -> usize {
        self.0.partition_point(|&h| h <= y)
    }

    /// Quantize a channel output to `0` or `1`.
    pub fn quantize(&self, y: f64, mapping: Mapping) -> u8 {
        if mapping.zero_parity().contains(self.segment_of(y)) {
            0
        } else {
            1
        }
    }
}

impl TryFrom<Vec<f64>> for ThresholdVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ThresholdVector> for Vec<f64> {
    fn from(t: ThresholdVector) -> Self {
        t.0
    }
}
