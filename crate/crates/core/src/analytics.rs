//! Corpus statistics: distributions, knee points and ranking similarity.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::smells::{SmellId, TestFindings};

/// Quantile grid resolution for knee detection.
pub const KNEE_GRID_STEP: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("knee detection needs at least 3 values, got {0}")]
    TooFewValues(usize),
    #[error("rankings are not permutations of the same smells")]
    MismatchedAlphabets,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KneePoint {
    pub quantile: f64,
    pub threshold: f64,
    /// Height of the normalized difference curve at the knee; near zero means no real knee.
    pub score: f64,
    /// All inputs were equal.
    pub degenerate: bool,
}

/// Lower empirical quantile: the smallest value with at least `q` of the mass at or below it.
fn quantile_value(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Knee of the quantile function of `values`.
///
/// The curve is sampled on a fixed grid, both axes are scaled to `[0, 1]`, and the knee is
/// the grid point farthest from the diagonal on the side the curve bends toward.
pub fn knee_point(values: &[f64]) -> Result<KneePoint, AnalyticsError> {
    if values.len() < 3 {
        return Err(AnalyticsError::TooFewValues(values.len()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    if lo == hi {
        log::warn!("all {} values equal {lo}; no knee", values.len());
        return Ok(KneePoint {
            quantile: 1.0,
            threshold: lo,
            score: 0.0,
            degenerate: true,
        });
    }
    let steps = (1.0 / KNEE_GRID_STEP).round() as usize;
    let curve: Vec<(f64, f64)> = (0..=steps)
        .map(|i| {
            let x = i as f64 / steps as f64;
            let y = quantile_value(&sorted, x);
            (x, (y - lo) / (hi - lo))
        })
        .collect();
    // convex curves sit below the diagonal, concave ones above
    let area: f64 = curve.iter().map(|(_, y)| y).sum::<f64>() / curve.len() as f64;
    let convex = area < 0.5;
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, (x, y)) in curve.iter().enumerate() {
        let d = if convex { x - y } else { y - x };
        if d > best.1 {
            best = (i, d);
        }
    }
    let x = curve[best.0].0;
    Ok(KneePoint {
        quantile: x,
        threshold: quantile_value(&sorted, x),
        score: best.1,
        degenerate: false,
    })
}

fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Normalized Levenshtein similarity of two rankings, one symbol per smell.
pub fn rank_similarity(a: &[SmellId], b: &[SmellId]) -> Result<f64, AnalyticsError> {
    let sa: BTreeSet<_> = a.iter().collect();
    let sb: BTreeSet<_> = b.iter().collect();
    if sa != sb || sa.len() != a.len() || sb.len() != b.len() {
        return Err(AnalyticsError::MismatchedAlphabets);
    }
    let longest = a.len().max(b.len());
    if longest == 0 {
        return Ok(1.0);
    }
    Ok(1.0 - edit_distance(a, b) as f64 / longest as f64)
}

/// Smells ordered by `stat` descending, ties by code.
pub fn rank_by(stat: impl Fn(SmellId) -> f64) -> Vec<SmellId> {
    let mut ids = SmellId::ALL.to_vec();
    ids.sort_by(|a, b| stat(*b).total_cmp(&stat(*a)).then_with(|| a.code().cmp(b.code())));
    ids
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

impl Stats {
    /// Quartiles by linear interpolation between order statistics.
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.total_cmp(b));
        let q = |p: f64| {
            let h = (v.len() - 1) as f64 * p;
            let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
            v[lo] + (h - lo as f64) * (v[hi] - v[lo])
        };
        Some(Stats {
            n: v.len(),
            min: v[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: v[v.len() - 1],
            mean: v.iter().sum::<f64>() / v.len() as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionSummary {
    pub smell: SmellId,
    pub tests: usize,
    pub symptomatic_tests: usize,
    pub percent_symptomatic: f64,
    /// Mean count over all tests, symptomatic or not.
    pub mean_count: f64,
    /// Counts of symptomatic tests only.
    pub counts: Option<Stats>,
    /// Densities of tests where the smell could occur.
    pub densities: Option<Stats>,
}

pub fn summarize(findings: &TestFindings) -> Vec<DistributionSummary> {
    SmellId::ALL
        .into_iter()
        .map(|s| {
            let all: Vec<_> = findings.values().map(|fs| &fs[s.index()]).collect();
            let counts: Vec<f64> = all.iter().filter(|f| f.count > 0).map(|f| f.count as f64).collect();
            let densities: Vec<f64> = all.iter().filter_map(|f| f.density()).collect();
            let tests = all.len();
            let total: usize = all.iter().map(|f| f.count).sum();
            DistributionSummary {
                smell: s,
                tests,
                symptomatic_tests: counts.len(),
                percent_symptomatic: if tests == 0 {
                    0.0
                } else {
                    100.0 * counts.len() as f64 / tests as f64
                },
                mean_count: if tests == 0 { 0.0 } else { total as f64 / tests as f64 },
                counts: Stats::of(&counts),
                densities: Stats::of(&densities),
            }
        })
        .collect()
}

/// Which statistic orders a ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankStatistic {
    MeanCount,
    MeanDensity,
    PercentSymptomatic,
}

impl RankStatistic {
    pub const ALL: [RankStatistic; 3] = [
        RankStatistic::MeanCount,
        RankStatistic::MeanDensity,
        RankStatistic::PercentSymptomatic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RankStatistic::MeanCount => "mean-count",
            RankStatistic::MeanDensity => "mean-density",
            RankStatistic::PercentSymptomatic => "percent-symptomatic",
        }
    }

    pub fn of(self, s: &DistributionSummary) -> f64 {
        match self {
            RankStatistic::MeanCount => s.mean_count,
            RankStatistic::MeanDensity => s.densities.map_or(0.0, |d| d.mean),
            RankStatistic::PercentSymptomatic => s.percent_symptomatic,
        }
    }
}

/// Smell ranking of a summary set under one statistic.
pub fn ranking(summaries: &[DistributionSummary], stat: RankStatistic) -> Vec<SmellId> {
    rank_by(|id| summaries.iter().find(|s| s.smell == id).map_or(0.0, |s| stat.of(s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smells::{Location, SmellFinding};
    use crate::calltree::TestId;
    use proptest::prelude::*;

    #[test]
    fn knee_of_a_long_tail() {
        let mut values = vec![1.0; 986];
        values.extend((2..=15).map(f64::from));
        let k = knee_point(&values).unwrap();
        assert!((k.quantile - 0.986).abs() < 1e-9, "{k:?}");
        assert_eq!(k.threshold, 1.0);
        assert!(values.contains(&k.threshold));
    }

    #[test]
    fn knee_degenerate_and_ramp() {
        let k = knee_point(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!((k.quantile, k.threshold, k.degenerate), (1.0, 5.0, true));
        let ramp: Vec<f64> = (1..=100).map(f64::from).collect();
        let k = knee_point(&ramp).unwrap();
        assert!(k.score.abs() < 0.02, "{k:?}");
        assert!(knee_point(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn similarity_examples() {
        let a = SmellId::ALL.to_vec();
        assert_eq!(rank_similarity(&a, &a).unwrap(), 1.0);
        let mut b = a.clone();
        b.swap(3, 4);
        assert_eq!(rank_similarity(&a, &b).unwrap(), 0.875);
        assert!(rank_similarity(&a[..3], &a[1..4]).is_err());
    }

    fn finding(smell: SmellId, count: usize, denominator: usize) -> SmellFinding {
        SmellFinding {
            smell,
            count,
            denominator,
            nodes: (0..count).map(|i| Location::Call(crate::calltree::NodeId(i as u32))).collect(),
        }
    }

    #[test]
    fn summary_examples() {
        let mut f = TestFindings::new();
        for (i, (c, d)) in [(0, 0), (2, 4), (4, 8)].into_iter().enumerate() {
            let id = TestId {
                path: "t.robot".into(),
                name: format!("T{i}"),
            };
            f.insert(
                id,
                SmellId::ALL
                    .into_iter()
                    .map(|s| if s == SmellId::OT { finding(s, c, d) } else { finding(s, 0, 0) })
                    .collect(),
            );
        }
        let s = &summarize(&f)[SmellId::OT.index()];
        assert!((s.percent_symptomatic - 66.666_666).abs() < 1e-3);
        assert_eq!(s.counts.unwrap().median, 3.0);
        assert_eq!(s.densities.unwrap().median, 0.5);
        assert_eq!(s.densities.unwrap().n, 2);
        let ss = &summarize(&f)[SmellId::SS.index()];
        assert_eq!(ss.percent_symptomatic, 0.0);
        assert!(ss.counts.is_none() && ss.densities.is_none());
    }

    #[test]
    fn ties_break_by_code() {
        let r = rank_by(|_| 0.0);
        let mut codes: Vec<&str> = SmellId::ALL.iter().map(|s| s.code()).collect();
        codes.sort();
        assert_eq!(r.iter().map(|s| s.code()).collect::<Vec<_>>(), codes);
    }

    proptest! {
        #[test]
        fn similarity_symmetric(seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut a = SmellId::ALL.to_vec();
            let mut b = SmellId::ALL.to_vec();
            a.shuffle(&mut rng);
            b.shuffle(&mut rng);
            let s = rank_similarity(&a, &b).unwrap();
            prop_assert_eq!(s, rank_similarity(&b, &a).unwrap());
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert_eq!(s == 1.0, a == b);
        }

        #[test]
        fn knee_threshold_is_attained(values in proptest::collection::vec(0u32..50, 3..200)) {
            let v: Vec<f64> = values.iter().map(|x| f64::from(*x)).collect();
            let k = knee_point(&v).unwrap();
            prop_assert!(v.contains(&k.threshold));
            prop_assert!((0.0..=1.0).contains(&k.quantile));
        }
    }
}
