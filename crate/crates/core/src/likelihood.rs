//! Likelihood ratio `r(y) = phi0(y) / phi1(y)`, the posterior variable
//! `u(y) = p1 phi1 / (p0 phi0 + p1 phi1)` and their level sets.
//!
//! Optimal thresholds are all crossings of `u(y) = a` for a single level `a`,
//! so [`find_level_set`] is the workhorse of the solver: a uniform grid scan
//! for sign changes, each refined by bisection.

use serde::{Deserialize, Serialize};

use crate::density::{DensityModel, Prior};
use crate::error::{Error, Result};
use crate::thresholds::ThresholdVector;

/// Default grid resolution for level-set scans and classifiers.
pub const DEFAULT_GRID_POINTS: usize = 4096;
/// Minimum grid resolution accepted by the classifiers.
pub const MIN_GRID_POINTS: usize = 64;
/// Search-domain margin in units of the largest component stddev.
pub const SEARCH_MARGIN_SIGMAS: f64 = 10.0;

const STRICTNESS: f64 = 1e-12;
const ROOT_TOL: f64 = 1e-12;
const SHIFT_TOL: f64 = 1e-9;
const MAX_ROOT_BISECTIONS: usize = 200;

/// Binary-input channel: prior plus the two conditional output densities,
/// and the finite window in which level-set roots are searched.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    prior: Prior,
    phi0: DensityModel,
    phi1: DensityModel,
    search_lo: f64,
    search_hi: f64,
}

fn all_components<'m>(
    a: &'m DensityModel,
    b: &'m DensityModel,
) -> impl Iterator<Item = (f64, f64)> + 'm {
    a.components()
        .iter()
        .chain(b.components())
        .map(|c| (c.mean, c.stddev))
}

/// `[min mean - 10 sigma_max, max mean + 10 sigma_max]` over both densities.
pub fn default_search_domain(phi0: &DensityModel, phi1: &DensityModel) -> (f64, f64) {
    let (mut lo, mut hi, mut sd) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for (m, s) in all_components(phi0, phi1) {
        lo = lo.min(m);
        hi = hi.max(m);
        sd = sd.max(s);
    }
    (
        lo - SEARCH_MARGIN_SIGMAS * sd,
        hi + SEARCH_MARGIN_SIGMAS * sd,
    )
}

impl ChannelSpec {
    /// Channel with the default search domain.
    pub fn new(prior: Prior, phi0: DensityModel, phi1: DensityModel) -> Self {
        let (search_lo, search_hi) = default_search_domain(&phi0, &phi1);
        Self {
            prior,
            phi0,
            phi1,
            search_lo,
            search_hi,
        }
    }

    /// Override the search domain. It must still cover every component mean
    /// with a margin of ten of the largest stddev.
    pub fn with_search_domain(mut self, lo: f64, hi: f64) -> Result<Self> {
        let bad = |reason: String| Error::InvalidSearchDomain { lo, hi, reason };
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(bad("bounds must be finite with lo < hi".into()));
        }
        let (need_lo, need_hi) = default_search_domain(&self.phi0, &self.phi1);
        if lo > need_lo || hi < need_hi {
            return Err(bad(format!(
                "must contain [{need_lo}, {need_hi}] (component means +/- {SEARCH_MARGIN_SIGMAS} max stddev)"
            )));
        }
        self.search_lo = lo;
        self.search_hi = hi;
        Ok(self)
    }

    pub fn prior(&self) -> Prior {
        self.prior
    }

    pub fn phi0(&self) -> &DensityModel {
        &self.phi0
    }

    pub fn phi1(&self) -> &DensityModel {
        &self.phi1
    }

    pub fn search_lo(&self) -> f64 {
        self.search_lo
    }

    pub fn search_hi(&self) -> f64 {
        self.search_hi
    }

    /// Uniform grid of `n` points over the search domain, endpoints included.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let step = (self.search_hi - self.search_lo) / (n - 1) as f64;
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    self.search_hi
                } else {
                    self.search_lo + i as f64 * step
                }
            })
            .collect()
    }

    /// `ln r(y)`.
    pub fn ln_ratio(&self, y: f64) -> f64 {
        self.phi0.ln_pdf(y) - self.phi1.ln_pdf(y)
    }

    /// Likelihood ratio `phi0(y) / phi1(y)`, computed in log space.
    pub fn ratio(&self, y: f64) -> f64 {
        self.ln_ratio(y).exp()
    }

    /// `u(y) = 1 / (1 + (p0/p1) r(y))`.
    pub fn posterior_a(&self, y: f64) -> f64 {
        let t = self.prior.p0().ln() - self.prior.p1().ln() + self.ln_ratio(y);
        // logistic(-t), written to avoid overflow for large |t|
        if t >= 0.0 {
            let e = (-t).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + t.exp())
        }
    }

    /// Ratio value corresponding to level `a`: `(p1/p0)(1 - a)/a`.
    pub fn ratio_at_level(&self, a: f64) -> f64 {
        (self.prior.p1() / self.prior.p0()) * (1.0 - a) / a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Monotonicity {
    StrictlyIncreasing,
    StrictlyDecreasing,
    NonMonotonic,
}

/// Numerical monotonicity verdict for `r(y)` on a finite grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityClass {
    pub kind: Monotonicity,
    pub grid_points: usize,
    /// Every successive difference of `ln r` was below the strictness
    /// threshold, i.e. `r` is numerically constant.
    pub flat: bool,
}

impl MonotonicityClass {
    pub fn is_strict(&self) -> bool {
        self.kind != Monotonicity::NonMonotonic
    }
}

fn check_grid(grid_points: usize) -> Result<()> {
    if grid_points < MIN_GRID_POINTS {
        Err(Error::GridTooSmall {
            min: MIN_GRID_POINTS,
            got: grid_points,
        })
    } else {
        Ok(())
    }
}

pub fn classify_monotonicity(spec: &ChannelSpec, grid_points: usize) -> Result<MonotonicityClass> {
    check_grid(grid_points)?;
    let lr: Vec<f64> = spec
        .grid(grid_points)
        .iter()
        .map(|&y| spec.ln_ratio(y))
        .collect();
    let (mut up, mut down, mut flat) = (true, true, true);
    for w in lr.windows(2) {
        let d = w[1] - w[0];
        up &= d > STRICTNESS;
        down &= d < -STRICTNESS;
        flat &= d.abs() <= STRICTNESS;
    }
    let kind = if up {
        Monotonicity::StrictlyIncreasing
    } else if down {
        Monotonicity::StrictlyDecreasing
    } else {
        Monotonicity::NonMonotonic
    };
    Ok(MonotonicityClass {
        kind,
        grid_points,
        flat,
    })
}

/// Outcome of the translate/log-concavity test for single-threshold
/// optimality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftVerdict {
    /// `phi1(y) = phi0(y - mu)` component-wise.
    pub shift_detected: bool,
    pub mu: f64,
    pub log_concave: bool,
    pub log_convex: bool,
}

pub fn check_log_concavity_shift(spec: &ChannelSpec, grid_points: usize) -> Result<ShiftVerdict> {
    check_grid(grid_points)?;
    let mu = spec.phi1.mean() - spec.phi0.mean();
    let sorted = |m: &DensityModel, offset: f64| {
        let mut v: Vec<(f64, f64, f64)> = m
            .components()
            .iter()
            .map(|c| (c.mean + offset, c.stddev, c.weight))
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        v
    };
    let shifted0 = sorted(&spec.phi0, mu);
    let comps1 = sorted(&spec.phi1, 0.0);
    let shift_detected = shifted0.len() == comps1.len()
        && shifted0.iter().zip(&comps1).all(|(a, b)| {
            (a.0 - b.0).abs() <= SHIFT_TOL
                && (a.1 - b.1).abs() <= SHIFT_TOL
                && (a.2 - b.2).abs() <= SHIFT_TOL
        });

    let (mut log_concave, mut log_convex) = (false, false);
    if shift_detected {
        let lp: Vec<f64> = spec
            .grid(grid_points)
            .iter()
            .map(|&y| spec.phi0.ln_pdf(y))
            .collect();
        let (mut cave, mut vex) = (true, true);
        for w in lp.windows(3) {
            let d2 = w[2] - 2.0 * w[1] + w[0];
            cave &= d2 < -STRICTNESS;
            vex &= d2 > STRICTNESS;
        }
        log_concave = cave;
        log_convex = vex;
    }
    Ok(ShiftVerdict {
        shift_detected,
        mu,
        log_concave,
        log_convex,
    })
}

/// All crossings of `u(y) = level_a` inside the search domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    pub level_a: f64,
    pub roots: ThresholdVector,
    /// Grid interval that bracketed each root, parallel to `roots`.
    pub brackets: Vec<(f64, f64)>,
    /// Grid spans where `|u - a|` stayed below `1e-12` without a crossing
    /// (or with a flat crossing). Diagnostic only, never thresholds.
    pub tangencies: Vec<(f64, f64)>,
}

pub(crate) fn check_level(a: f64) -> Result<()> {
    if a > 1e-9 && a < 1.0 - 1e-9 {
        Ok(())
    } else {
        Err(Error::InvalidLevel(a))
    }
}

fn refine_root(spec: &ChannelSpec, a: f64, mut lo: f64, mut hi: f64, lo_sign: f64) -> f64 {
    for _ in 0..MAX_ROOT_BISECTIONS {
        if hi - lo <= ROOT_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = spec.posterior_a(mid) - a;
        if v.abs() <= ROOT_TOL {
            return mid;
        }
        if v.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sign of `v` with values within the root tolerance treated as zero.
fn tri_sign(v: f64) -> i8 {
    if v > ROOT_TOL {
        1
    } else if v < -ROOT_TOL {
        -1
    } else {
        0
    }
}

pub fn find_level_set(spec: &ChannelSpec, a: f64, grid_points: usize) -> Result<LevelSet> {
    check_level(a)?;
    check_grid(grid_points)?;
    let ys = spec.grid(grid_points);
    let vs: Vec<f64> = ys.iter().map(|&y| spec.posterior_a(y) - a).collect();
    let signs: Vec<i8> = vs.iter().map(|&v| tri_sign(v)).collect();

    let mut roots = Vec::new();
    let mut brackets = Vec::new();
    let mut tangencies = Vec::new();

    let n = ys.len();
    let run_end = |from: usize| {
        let mut end = from;
        while end + 1 < n && signs[end + 1] == 0 {
            end += 1;
        }
        end
    };

    let mut i = 0;
    if signs[0] == 0 {
        let end = run_end(0);
        tangencies.push((ys[0], ys[end]));
        i = end + 1;
    }
    // invariant: signs[i] != 0
    while i + 1 < n {
        if signs[i + 1] != 0 {
            if signs[i] != signs[i + 1] {
                roots.push(refine_root(spec, a, ys[i], ys[i + 1], vs[i].signum()));
                brackets.push((ys[i], ys[i + 1]));
            }
            i += 1;
            continue;
        }
        let start = i + 1;
        let end = run_end(start);
        let after = signs.get(end + 1).copied().unwrap_or(0);
        let crossing = after != 0 && after != signs[i];
        if crossing {
            roots.push(0.5 * (ys[start] + ys[end]));
            brackets.push((ys[i], ys[end + 1]));
        }
        if !crossing || end > start {
            tangencies.push((ys[start], ys[end]));
        }
        i = end + 1;
    }

    // roots come out in grid order; enforce strictness against coincident
    // refinements from adjacent brackets
    let mut uniq_roots: Vec<f64> = Vec::with_capacity(roots.len());
    let mut uniq_brackets = Vec::with_capacity(brackets.len());
    for (r, b) in roots.into_iter().zip(brackets) {
        if uniq_roots.last().is_none_or(|&last| r > last) {
            uniq_roots.push(r);
            uniq_brackets.push(b);
        }
    }
    Ok(LevelSet {
        level_a: a,
        roots: ThresholdVector::new(uniq_roots)?,
        brackets: uniq_brackets,
        tangencies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use approx::assert_abs_diff_eq;

    /// Two single Gaussians reduce `u(y) = a` to a quadratic in `y`.
    fn quadratic_roots(m0: f64, s0: f64, m1: f64, s1: f64, p0: f64, a: f64) -> Vec<f64> {
        // ln phi0 - ln phi1 = ln((1-a) p1 / (a p0))
        let c = ((1.0 - a) * (1.0 - p0) / (a * p0)).ln() + (s0 / s1).ln();
        let qa = -0.5 / (s0 * s0) + 0.5 / (s1 * s1);
        let qb = m0 / (s0 * s0) - m1 / (s1 * s1);
        let qc = -0.5 * m0 * m0 / (s0 * s0) + 0.5 * m1 * m1 / (s1 * s1) - c;
        if qa.abs() < 1e-15 {
            return vec![-qc / qb];
        }
        let disc = qb * qb - 4.0 * qa * qc;
        if disc <= 0.0 {
            return vec![];
        }
        let d = disc.sqrt();
        let mut r = vec![(-qb - d) / (2.0 * qa), (-qb + d) / (2.0 * qa)];
        r.sort_by(f64::total_cmp);
        r
    }

    #[test]
    fn ratio_examples() {
        assert_abs_diff_eq!(presets::example1().ratio(0.0), 1.0, epsilon = 1e-15);
        let ex2 = presets::example2();
        // 40-digit reference: 1.42715156870319295...
        assert_abs_diff_eq!(ex2.ratio(-0.5374), 1.427_151_568_703_193, epsilon = 1e-12);
        assert_abs_diff_eq!(ex2.ratio(3.5374), 1.427_151_568_703_193, epsilon = 1e-12);
    }

    #[test]
    fn posterior_examples() {
        assert_abs_diff_eq!(presets::example1().posterior_a(0.0), 0.5, epsilon = 1e-15);
        let ex2 = presets::example2();
        assert_abs_diff_eq!(ex2.posterior_a(-0.5374), 0.412, epsilon = 5e-4);
        assert!(ex2.posterior_a(ex2.search_lo()) < 0.01);
        assert!(ex2.posterior_a(ex2.search_hi()) < 0.01);
    }

    #[test]
    fn posterior_decreasing_in_ratio() {
        let spec = presets::fig5();
        let mut pts: Vec<(f64, f64)> = spec
            .grid(500)
            .into_iter()
            .map(|y| (spec.ratio(y), spec.posterior_a(y)))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pts.windows(2) {
            if w[0].0 < w[1].0 {
                assert!(w[0].1 >= w[1].1);
            }
        }
    }

    #[test]
    fn monotonicity_examples() {
        let c1 = classify_monotonicity(&presets::example1(), 4096).unwrap();
        assert_eq!(c1.kind, Monotonicity::StrictlyDecreasing);
        assert_eq!(c1.grid_points, 4096);
        let c2 = classify_monotonicity(&presets::example2(), 4096).unwrap();
        assert_eq!(c2.kind, Monotonicity::NonMonotonic);
        let flat = classify_monotonicity(&presets::identical(), 4096).unwrap();
        assert_eq!(flat.kind, Monotonicity::NonMonotonic);
        assert!(flat.flat);
        assert!(classify_monotonicity(&presets::example1(), 10).is_err());
    }

    #[test]
    fn shift_examples() {
        let v1 = check_log_concavity_shift(&presets::example1(), 4096).unwrap();
        assert!(v1.shift_detected);
        assert_abs_diff_eq!(v1.mu, 2.0, epsilon = 1e-12);
        assert!(v1.log_concave && !v1.log_convex);
        assert!(
            !check_log_concavity_shift(&presets::example2(), 4096)
                .unwrap()
                .shift_detected
        );
        assert!(
            !check_log_concavity_shift(&presets::fig5(), 4096)
                .unwrap()
                .shift_detected
        );
    }

    #[test]
    fn shift_detects_translated_mixture() {
        let phi0 = DensityModel::mixture(&[(-1.0, 0.5, 0.5), (1.0, 0.7, 0.5)]).unwrap();
        let phi1 = DensityModel::mixture(&[(2.0, 0.7, 0.5), (0.0, 0.5, 0.5)]).unwrap();
        let spec = ChannelSpec::new(Prior::uniform(), phi0, phi1);
        let v = check_log_concavity_shift(&spec, 4096).unwrap();
        assert!(v.shift_detected);
        assert_abs_diff_eq!(v.mu, 1.0, epsilon = 1e-12);
        // bimodal mixture is not log-concave
        assert!(!v.log_concave);
    }

    #[test]
    fn level_set_examples() {
        let l1 = find_level_set(&presets::example1(), 0.5, 4096).unwrap();
        assert_eq!(l1.roots.len(), 1);
        assert_abs_diff_eq!(l1.roots.as_slice()[0], 0.0, epsilon = 1e-10);

        let l2 = find_level_set(&presets::example2(), 0.412, 4096).unwrap();
        assert_eq!(l2.roots.len(), 2);
        assert_abs_diff_eq!(l2.roots.as_slice()[0], -0.5374, epsilon = 1e-3);
        assert_abs_diff_eq!(l2.roots.as_slice()[1], 3.5374, epsilon = 1e-3);

        let l5 = find_level_set(&presets::fig5(), 0.5, 4096).unwrap();
        assert_eq!(l5.roots.len(), 6);
        assert!(l5.tangencies.is_empty());
    }

    #[test]
    fn level_set_matches_quadratic_oracle() {
        let s5 = 5f64.sqrt();
        for &p0 in &[0.3, 0.5, 0.7] {
            let spec = ChannelSpec::new(
                Prior::new(p0).unwrap(),
                DensityModel::gaussian(-1.0, s5).unwrap(),
                DensityModel::gaussian(1.0, 1.0).unwrap(),
            );
            for &a in &[0.05, 0.2, 0.35, 0.5, 0.6] {
                let got = find_level_set(&spec, a, 4096).unwrap();
                let want = quadratic_roots(-1.0, s5, 1.0, 1.0, p0, a);
                assert_eq!(got.roots.len(), want.len(), "p0={p0} a={a}");
                for (g, w) in got.roots.as_slice().iter().zip(&want) {
                    assert_abs_diff_eq!(*g, *w, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn roots_satisfy_level_and_ratio() {
        for spec in [presets::example1(), presets::example2(), presets::fig5()] {
            for k in 1..10 {
                let a = k as f64 / 10.0;
                let ls = find_level_set(&spec, a, 4096).unwrap();
                for &r in ls.roots.as_slice() {
                    assert!(r >= spec.search_lo() && r <= spec.search_hi());
                    assert!((spec.posterior_a(r) - a).abs() <= 1e-9);
                    let want = spec.ratio_at_level(a);
                    assert!((spec.ratio(r) - want).abs() <= 1e-8 * want.max(1.0));
                }
            }
        }
    }

    #[test]
    fn strictly_monotone_gives_at_most_one_root() {
        let spec = presets::example1();
        assert!(classify_monotonicity(&spec, 4096).unwrap().is_strict());
        for k in 1..10 {
            let ls = find_level_set(&spec, k as f64 / 10.0, 4096).unwrap();
            assert!(ls.roots.len() <= 1);
        }
    }

    #[test]
    fn refinement_never_loses_roots() {
        for spec in [presets::example1(), presets::example2(), presets::fig5()] {
            for k in 1..10 {
                let a = k as f64 / 10.0;
                let mut prev = 0;
                for n in [512, 1024, 2048, 4096, 8192] {
                    let count = find_level_set(&spec, a, n).unwrap().roots.len();
                    assert!(count >= prev, "a={a} n={n}");
                    prev = count;
                }
            }
        }
    }

    #[test]
    fn identical_densities_report_tangency() {
        // u == p1 everywhere; probing exactly at that level is a flat run
        let ls = find_level_set(&presets::identical(), 0.5, 128).unwrap();
        assert!(ls.roots.is_empty());
        assert_eq!(ls.tangencies.len(), 1);
    }

    #[test]
    fn exact_grid_zero_is_a_root() {
        // symmetric domain with an odd grid puts y = 0 on a grid point
        let spec = presets::example1().with_search_domain(-12.0, 12.0).unwrap();
        let ls = find_level_set(&spec, 0.5, 4097).unwrap();
        assert_eq!(ls.roots.as_slice(), &[0.0]);
        assert!(ls.tangencies.is_empty());
    }

    #[test]
    fn level_rejected_outside_unit_interval() {
        let spec = presets::example1();
        assert!(find_level_set(&spec, 0.0, 4096).is_err());
        assert!(find_level_set(&spec, 1.0, 4096).is_err());
        assert!(find_level_set(&spec, -0.3, 4096).is_err());
    }

    #[test]
    fn search_domain_must_cover_margin() {
        let spec = presets::example1();
        assert!(spec.clone().with_search_domain(-5.0, 5.0).is_err());
        assert!(spec.clone().with_search_domain(1.0, -1.0).is_err());
        let wide = spec.with_search_domain(-40.0, 40.0).unwrap();
        assert_eq!((wide.search_lo(), wide.search_hi()), (-40.0, 40.0));
    }
}
