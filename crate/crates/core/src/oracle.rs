//! Brute-force checks that do not go through the stationarity function:
//! exhaustive threshold grids, sweeps over the level `a`, and finite
//! difference checks of the structural properties of `f(a)` and `g(a)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    channel_matrix, functionals_with_grid, mutual_information, ChannelMatrix, StationarityForm,
};
use crate::error::{Error, Result};
use crate::likelihood::{ChannelSpec, DEFAULT_GRID_POINTS};
use crate::thresholds::{Mapping, ThresholdVector};

pub const MAX_ORACLE_THRESHOLDS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_mi_bits: f64,
    pub best_thresholds: ThresholdVector,
    pub best_mapping: Mapping,
    pub n_evaluated: u64,
    pub grid_step: f64,
}

#[derive(Clone, Copy)]
struct Candidate {
    mi: f64,
    idx: [usize; MAX_ORACLE_THRESHOLDS],
    mapping: Mapping,
}

impl Candidate {
    /// Larger MI wins; ties go to the lexicographically smallest tuple.
    fn better(self, other: Self) -> Self {
        if other.mi > self.mi || (other.mi == self.mi && other.idx < self.idx) {
            other
        } else {
            self
        }
    }
}

/// Mass of odd segments for edges given as CDF values (`cdf[idx]`).
fn odd_mass(cdf: &[f64], idx: &[usize]) -> f64 {
    // segments: (-inf, e0), [e1, e2), [e3, e4), ...
    let mut m = cdf[idx[0]];
    let mut k = 1;
    while k < idx.len() {
        let hi = idx.get(k + 1).map_or(1.0, |&j| cdf[j]);
        m += hi - cdf[idx[k]];
        k += 2;
    }
    m
}

/// Exhaustive search over strictly increasing `n`-tuples of grid points in
/// the search domain, both label mappings.
pub fn grid_search(
    spec: &ChannelSpec,
    n_thresholds: usize,
    grid_step: f64,
) -> Result<OracleResult> {
    if n_thresholds == 0 || n_thresholds > MAX_ORACLE_THRESHOLDS {
        return Err(Error::TooManyThresholds(n_thresholds));
    }
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::InvalidOracleParameter(format!(
            "grid_step {grid_step} must be > 0"
        )));
    }
    let (lo, hi) = (spec.search_lo(), spec.search_hi());
    let count = ((hi - lo) / grid_step + 1e-9).floor() as usize + 1;
    if count < n_thresholds {
        return Err(Error::InvalidOracleParameter("grid too coarse".into()));
    }
    let ys: Vec<f64> = (0..count).map(|j| lo + j as f64 * grid_step).collect();
    let cdf0: Vec<f64> = ys.iter().map(|&y| spec.phi0().cdf(y)).collect();
    let cdf1: Vec<f64> = ys.iter().map(|&y| spec.phi1().cdf(y)).collect();
    let prior = spec.prior();

    let eval = |idx: &[usize]| -> Candidate {
        let o0 = odd_mass(&cdf0, idx);
        let o1 = odd_mass(&cdf1, idx);
        let mut key = [usize::MAX; MAX_ORACLE_THRESHOLDS];
        key[..idx.len()].copy_from_slice(idx);
        let odd = mutual_information(prior, ChannelMatrix::new(o0, 1.0 - o1));
        let even = mutual_information(prior, ChannelMatrix::new(1.0 - o0, o1));
        let c = Candidate {
            mi: odd,
            idx: key,
            mapping: Mapping::OddToZero,
        };
        if even > odd {
            Candidate {
                mi: even,
                mapping: Mapping::EvenToZero,
                ..c
            }
        } else {
            c
        }
    };

    let worst = Candidate {
        mi: f64::NEG_INFINITY,
        idx: [usize::MAX; 3],
        mapping: Mapping::OddToZero,
    };
    let best = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut best = worst;
            match n_thresholds {
                1 => best = best.better(eval(&[i])),
                2 => {
                    for j in i + 1..count {
                        best = best.better(eval(&[i, j]));
                    }
                }
                _ => {
                    for j in i + 1..count {
                        for k in j + 1..count {
                            best = best.better(eval(&[i, j, k]));
                        }
                    }
                }
            }
            best
        })
        .reduce(|| worst, Candidate::better);

    if best.mi == f64::NEG_INFINITY {
        return Err(Error::InvalidOracleParameter(
            "no candidate evaluated".into(),
        ));
    }
    let best_thresholds =
        ThresholdVector::new(best.idx[..n_thresholds].iter().map(|&j| ys[j]).collect())?;
    // report MI through the regular channel path so it matches exactly
    let best_mi_bits =
        mutual_information(prior, channel_matrix(spec, &best_thresholds, best.mapping));
    let n = count as u64;
    let tuples = match n_thresholds {
        1 => n,
        2 => n * (n - 1) / 2,
        _ => n * (n - 1) * (n - 2) / 6,
    };
    Ok(OracleResult {
        best_mi_bits,
        best_thresholds,
        best_mapping: best.mapping,
        n_evaluated: 2 * tuples,
        grid_step,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub a: f64,
    pub f: f64,
    pub g: f64,
    /// Stationarity value; NaN on degenerate rows.
    pub stationarity: f64,
    pub mi_bits: f64,
    pub n_roots: usize,
    pub degenerate: bool,
}

/// One row per level: functionals, stationarity value and the MI of the
/// quantizer induced at that level.
pub fn sweep_a(
    spec: &ChannelSpec,
    a_grid: &[f64],
    form: StationarityForm,
) -> Result<Vec<SweepRow>> {
    sweep_a_with_grid(spec, a_grid, form, DEFAULT_GRID_POINTS)
}

pub fn sweep_a_with_grid(
    spec: &ChannelSpec,
    a_grid: &[f64],
    form: StationarityForm,
    grid_points: usize,
) -> Result<Vec<SweepRow>> {
    a_grid
        .par_iter()
        .map(|&a| {
            let fun = functionals_with_grid(spec, a, grid_points)?;
            let (stationarity, degenerate) = match form.evaluate(spec.prior(), a, fun.f, fun.g) {
                Ok(v) => (v, false),
                Err(Error::DegenerateChannel { .. }) => (f64::NAN, true),
                Err(e) => return Err(e),
            };
            Ok(SweepRow {
                a,
                f: fun.f,
                g: fun.g,
                stationarity,
                mi_bits: mutual_information(spec.prior(), fun.channel()),
                n_roots: fun.roots.len(),
                degenerate,
            })
        })
        .collect()
}

/// `{0.05, 0.10, ..., 0.95}`.
pub fn default_a_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 * 0.05).collect()
}

pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaCheck {
    /// `f` non-decreasing and `g` non-increasing in `a`.
    MonotoneFunctionals,
    /// `f + g >= 1`.
    SumAtLeastOne,
    /// `f'(a) = -((1-a) p1 / (a p0)) g'(a)`, the relation implied by the
    /// threshold condition.
    DerivativeRelation,
    /// `f'(a) = -(a p0 / ((1-a) p1)) g'(a)`, the reciprocal-factor relation.
    /// Informational: it only holds where both factors coincide.
    DerivativeRelationReciprocal,
    /// `A >= B` with `A = q0 (1 - q0)` and `B = p0 f(1-f) + p1 g(1-g)`.
    AAtLeastB,
    /// Reciprocal-form `F(a)` non-decreasing.
    ReciprocalFNonDecreasing,
}

impl LemmaCheck {
    pub fn name(self) -> &'static str {
        match self {
            LemmaCheck::MonotoneFunctionals => "f non-decreasing, g non-increasing",
            LemmaCheck::SumAtLeastOne => "f + g >= 1",
            LemmaCheck::DerivativeRelation => "f' = -((1-a)p1/(a p0)) g'",
            LemmaCheck::DerivativeRelationReciprocal => "f' = -(a p0/((1-a)p1)) g' (reciprocal)",
            LemmaCheck::AAtLeastB => "A >= B",
            LemmaCheck::ReciprocalFNonDecreasing => "reciprocal F non-decreasing",
        }
    }

    /// Whether a failure of this check counts as a verification failure.
    pub fn gating(self) -> bool {
        self != LemmaCheck::DerivativeRelationReciprocal
    }

    fn tolerance(self) -> f64 {
        match self {
            LemmaCheck::MonotoneFunctionals => 1e-10,
            LemmaCheck::SumAtLeastOne => 1e-9,
            LemmaCheck::DerivativeRelation | LemmaCheck::DerivativeRelationReciprocal => 1e-3,
            LemmaCheck::AAtLeastB => 1e-12,
            LemmaCheck::ReciprocalFNonDecreasing => 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaOutcome {
    pub check: LemmaCheck,
    pub pass: bool,
    pub worst_violation: f64,
    /// Level where the worst violation occurred.
    pub worst_at: Option<f64>,
    pub points_checked: usize,
    pub points_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub outcomes: Vec<LemmaOutcome>,
}

impl LemmaReport {
    pub fn get(&self, check: LemmaCheck) -> &LemmaOutcome {
        self.outcomes
            .iter()
            .find(|o| o.check == check)
            .expect("all checks are reported")
    }

    /// All gating checks pass.
    pub fn all_pass(&self) -> bool {
        self.outcomes.iter().all(|o| o.pass || !o.check.gating())
    }
}

struct Tracker {
    check: LemmaCheck,
    worst: f64,
    worst_at: Option<f64>,
    checked: usize,
    skipped: usize,
}

impl Tracker {
    fn new(check: LemmaCheck) -> Self {
        Self {
            check,
            worst: 0.0,
            worst_at: None,
            checked: 0,
            skipped: 0,
        }
    }

    fn record(&mut self, a: f64, violation: f64) {
        self.checked += 1;
        if violation > self.worst || violation.is_nan() {
            self.worst = violation;
            self.worst_at = Some(a);
        }
    }

    fn finish(self) -> LemmaOutcome {
        let pass = self.worst <= self.check.tolerance();
        LemmaOutcome {
            check: self.check,
            pass,
            worst_violation: self.worst,
            worst_at: self.worst_at,
            points_checked: self.checked,
            points_skipped: self.skipped,
        }
    }
}

/// `|x - y| / max(|x|, |y|)`, zero when both vanish.
fn relative_gap(x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if scale <= 1e-14 {
        0.0
    } else {
        (x - y).abs() / scale
    }
}

pub fn lemma_checks(spec: &ChannelSpec, a_grid: &[f64], fd_step: f64) -> Result<LemmaReport> {
    lemma_checks_with_grid(spec, a_grid, fd_step, DEFAULT_GRID_POINTS)
}

pub fn lemma_checks_with_grid(
    spec: &ChannelSpec,
    a_grid: &[f64],
    fd_step: f64,
    grid_points: usize,
) -> Result<LemmaReport> {
    if fd_step.is_nan() || fd_step <= 0.0 {
        return Err(Error::InvalidOracleParameter(format!(
            "fd_step {fd_step} must be > 0"
        )));
    }
    for &a in a_grid {
        if !(a - fd_step > 0.0 && a + fd_step < 1.0) {
            return Err(Error::InvalidOracleParameter(format!(
                "a = {a} with fd_step {fd_step} leaves (0, 1)"
            )));
        }
    }
    let mut grid = a_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let (p0, p1) = (spec.prior().p0(), spec.prior().p1());

    struct Point {
        a: f64,
        f: f64,
        g: f64,
        fp: f64,
        gp: f64,
        degenerate: bool,
        reciprocal: Option<f64>,
    }

    let points: Vec<Point> = grid
        .par_iter()
        .map(|&a| -> Result<Point> {
            let at = |x| functionals_with_grid(spec, x, grid_points);
            let c = at(a)?;
            let up = at(a + fd_step)?;
            let dn = at(a - fd_step)?;
            let reciprocal = StationarityForm::Reciprocal
                .evaluate(spec.prior(), a, c.f, c.g)
                .ok();
            Ok(Point {
                a,
                f: c.f,
                g: c.g,
                fp: (up.f - dn.f) / (2.0 * fd_step),
                gp: (up.g - dn.g) / (2.0 * fd_step),
                degenerate: c.is_degenerate() || up.is_degenerate() || dn.is_degenerate(),
                reciprocal,
            })
        })
        .collect::<Result<_>>()?;

    let mut mono = Tracker::new(LemmaCheck::MonotoneFunctionals);
    let mut sum = Tracker::new(LemmaCheck::SumAtLeastOne);
    let mut rel = Tracker::new(LemmaCheck::DerivativeRelation);
    let mut rel_pub = Tracker::new(LemmaCheck::DerivativeRelationReciprocal);
    let mut ab = Tracker::new(LemmaCheck::AAtLeastB);
    let mut fmono = Tracker::new(LemmaCheck::ReciprocalFNonDecreasing);

    for (k, p) in points.iter().enumerate() {
        sum.record(p.a, (1.0 - (p.f + p.g)).max(0.0));

        let q0 = p0 * p.f + p1 * (1.0 - p.g);
        let big_a = q0 * (p0 * (1.0 - p.f) + p1 * p.g);
        let big_b = p0 * p.f * (1.0 - p.f) + p1 * p.g * (1.0 - p.g);
        ab.record(p.a, (big_b - big_a).max(0.0));

        if p.degenerate {
            rel.skipped += 1;
            rel_pub.skipped += 1;
        } else {
            let a = p.a;
            rel.record(a, relative_gap(p.fp, -((1.0 - a) * p1 / (a * p0)) * p.gp));
            rel_pub.record(a, relative_gap(p.fp, -(a * p0 / ((1.0 - a) * p1)) * p.gp));
        }

        if k > 0 {
            let prev = &points[k - 1];
            mono.record(p.a, (prev.f - p.f).max(p.g - prev.g).max(0.0));
            match (prev.reciprocal, p.reciprocal) {
                (Some(x), Some(y)) => fmono.record(p.a, (x - y).max(0.0)),
                _ => fmono.skipped += 1,
            }
        }
    }

    Ok(LemmaReport {
        outcomes: vec![
            mono.finish(),
            sum.finish(),
            rel.finish(),
            rel_pub.finish(),
            ab.finish(),
            fmono.finish(),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::solver::{solve, SolverConfig};
    use approx::assert_abs_diff_eq;

    #[test]
    fn odd_mass_matches_partition_mass() {
        let spec = presets::fig5();
        let ys = [-4.0, -1.5, 0.2, 2.5];
        let cdf: Vec<f64> = ys.iter().map(|&y| spec.phi0().cdf(y)).collect();
        for idx in [&[0usize][..], &[0, 2], &[1, 2, 3], &[0, 1, 2, 3]] {
            let h = ThresholdVector::new(idx.iter().map(|&i| ys[i]).collect()).unwrap();
            let want = spec
                .phi0()
                .partition_mass(&h, crate::thresholds::Parity::Odd);
            assert_abs_diff_eq!(odd_mass(&cdf, idx), want, epsilon = 1e-14);
        }
    }

    #[test]
    fn example1_single_threshold_search() {
        let spec = presets::example1();
        let res = grid_search(&spec, 1, 0.01).unwrap();
        assert!(res.best_thresholds.as_slice()[0].abs() <= 0.01);
        let d = solve(&spec, &SolverConfig::default()).unwrap();
        assert!((res.best_mi_bits - d.mi_bits).abs() <= 1e-4);
        assert_eq!(
            res.best_mi_bits,
            mutual_information(
                spec.prior(),
                channel_matrix(&spec, &res.best_thresholds, res.best_mapping)
            )
        );
    }

    #[test]
    fn example2_two_thresholds_beat_one() {
        let spec = presets::example2();
        let one = grid_search(&spec, 1, 0.02).unwrap();
        let two = grid_search(&spec, 2, 0.02).unwrap();
        assert!(two.best_mi_bits > one.best_mi_bits + 1e-3);
    }

    #[test]
    fn identical_channel_has_zero_mi() {
        let res = grid_search(&presets::identical(), 1, 0.05).unwrap();
        assert!(res.best_mi_bits <= 1e-12);
    }

    #[test]
    fn three_threshold_search_runs_on_coarse_grid() {
        let spec = presets::example2();
        let res = grid_search(&spec, 3, 0.25).unwrap();
        assert_eq!(res.best_thresholds.len(), 3);
        // a third threshold cannot beat the two-threshold optimum by more than grid slack
        assert!(res.best_mi_bits <= 0.261_382_822_737_763_3 + 1e-9);
    }

    #[test]
    fn grid_search_rejects_bad_parameters() {
        let spec = presets::example1();
        assert!(matches!(
            grid_search(&spec, 4, 0.1),
            Err(Error::TooManyThresholds(4))
        ));
        assert!(grid_search(&spec, 0, 0.1).is_err());
        assert!(grid_search(&spec, 1, 0.0).is_err());
        assert!(grid_search(&spec, 1, -1.0).is_err());
    }

    #[test]
    fn tie_break_prefers_smallest_tuple() {
        let a = Candidate {
            mi: 1.0,
            idx: [3, 5, usize::MAX],
            mapping: Mapping::OddToZero,
        };
        let b = Candidate {
            mi: 1.0,
            idx: [2, 9, usize::MAX],
            mapping: Mapping::OddToZero,
        };
        assert_eq!(a.better(b).idx, b.idx);
        assert_eq!(b.better(a).idx, b.idx);
    }

    #[test]
    fn sweep_example1_unimodal_at_half() {
        let spec = presets::example1();
        let grid: Vec<f64> = (1..=99).map(|k| k as f64 / 100.0).collect();
        let rows = sweep_a(&spec, &grid, StationarityForm::Corrected).unwrap();
        let (imax, _) = rows
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.mi_bits.total_cmp(&b.1.mi_bits))
            .unwrap();
        assert_abs_diff_eq!(rows[imax].a, 0.5, epsilon = 1e-12);
        for w in rows[..=imax].windows(2) {
            assert!(w[1].mi_bits >= w[0].mi_bits - 1e-12);
        }
        for w in rows[imax..].windows(2) {
            assert!(w[1].mi_bits <= w[0].mi_bits + 1e-12);
        }
    }

    #[test]
    fn sweep_example2_peak_and_single_sign_change() {
        let spec = presets::example2();
        let grid: Vec<f64> = (1..=99).map(|k| k as f64 / 100.0).collect();
        let d = solve(&spec, &SolverConfig::default()).unwrap();
        for form in [StationarityForm::Corrected, StationarityForm::Reciprocal] {
            let rows = sweep_a(&spec, &grid, form).unwrap();
            let best = rows
                .iter()
                .max_by(|a, b| a.mi_bits.total_cmp(&b.mi_bits))
                .unwrap();
            assert!((best.a - d.a_star).abs() <= 0.01);
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| !r.degenerate)
                .map(|r| r.stationarity)
                .collect();
            let changes = vals
                .windows(2)
                .filter(|w| w[0].signum() != w[1].signum())
                .count();
            assert_eq!(changes, 1, "{form:?}");
            assert!(rows.iter().any(|r| r.degenerate && r.stationarity.is_nan()));
        }
    }

    #[test]
    fn sweep_fig5_has_six_roots_at_half() {
        let rows = sweep_a(&presets::fig5(), &[0.5], StationarityForm::Corrected).unwrap();
        assert_eq!(rows[0].n_roots, 6);
    }

    #[test]
    fn reciprocal_f_column_non_decreasing() {
        for spec in [presets::example1(), presets::example2(), presets::fig5()] {
            let rows = sweep_a(&spec, &default_a_grid(), StationarityForm::Reciprocal).unwrap();
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| !r.degenerate)
                .map(|r| r.stationarity)
                .collect();
            for w in vals.windows(2) {
                assert!(w[1] >= w[0] - 1e-9);
            }
        }
    }

    #[test]
    fn reciprocal_f_fine_grid() {
        let grid: Vec<f64> = (1..=99).map(|k| k as f64 / 100.0).collect();
        for spec in [presets::example1(), presets::fig5()] {
            let rows = sweep_a(&spec, &grid, StationarityForm::Reciprocal).unwrap();
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| !r.degenerate)
                .map(|r| r.stationarity)
                .collect();
            assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        }
        // just below sup u ~ 0.7866 the reciprocal F turns down (40-digit reference values)
        let rows = sweep_a(
            &presets::example2(),
            &[0.77, 0.78],
            StationarityForm::Reciprocal,
        )
        .unwrap();
        assert_abs_diff_eq!(
            rows[0].stationarity,
            0.786_544_728_179_836,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            rows[1].stationarity,
            0.774_846_014_400_771_6,
            epsilon = 1e-9
        );
    }

    #[test]
    fn lemma_checks_on_examples() {
        for spec in [presets::example1(), presets::example2(), presets::fig5()] {
            let rep = lemma_checks(&spec, &default_a_grid(), DEFAULT_FD_STEP).unwrap();
            assert!(rep.all_pass(), "{rep:#?}");
            assert!(rep.get(LemmaCheck::DerivativeRelation).worst_violation <= 1e-6);
            // the reciprocal factor only agrees with the true one at a = 1/2
            assert!(!rep.get(LemmaCheck::DerivativeRelationReciprocal).pass);
        }
    }

    #[test]
    fn lemma_checks_validate_step() {
        let spec = presets::example1();
        assert!(lemma_checks(&spec, &[0.5], 0.0).is_err());
        assert!(lemma_checks(&spec, &[0.99999], 1e-4).is_err());
    }
}
