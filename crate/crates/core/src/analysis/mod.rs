//! Rank correlation, opposite-value consistency and the report tables built
//! from them.

mod report;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::heuristics::{HeuristicCode, HeuristicPhase, HeuristicProfile};

pub use report::{
    feature_rating_correlations, leaderboard_extremes, mean_weights, render_correlations,
    render_extremes, render_mean_weights, render_ovc_table, weight_correlations, AnalysisReport,
    CorrelationColumn, ExtremeRow, FeatureCorrelation, MeanWeights, WeightCorrelation,
};

/// Above this many points the p-value comes from the t approximation.
pub const EXACT_MAX_N: usize = 8;
/// Ceiling applied to an opposite-pair weight ratio.
pub const RATIO_CAP: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 paired observations, got {0}")]
    TooShort(usize),
    #[error("correlation is undefined for a constant sample")]
    Constant,
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("no feature ratings for `{0}`")]
    MissingRatings(String),
    #[error("no profiles given")]
    Empty,
}

/// Opposing heuristic pairs compared for consistency, per phase.
pub const OPPOSITE_PAIRS: [(HeuristicPhase, [(HeuristicCode, HeuristicCode); 5]); 3] = {
    use HeuristicCode::*;
    [
        (
            HeuristicPhase::Deploy,
            [(EACM, EACL), (ETE, ETN), (PCM, PCL), (PTM, PTL), (PUM, PUL)],
        ),
        (
            HeuristicPhase::Attack,
            [(ICD, ICS), (ONM, ONL), (PCM, PCL), (PTM, PTL), (PUM, PUL)],
        ),
        (
            HeuristicPhase::Redeploy,
            [(CNM, CNL), (M, L), (OBCM, OBCL), (OBTM, OBTL), (OBUM, OBUL)],
        ),
    ]
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spearman {
    pub rho: f64,
    /// Two-sided.
    pub p: f64,
    pub n: usize,
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[idx[k]] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Exact two-sided p: the share of orderings of `ry` whose rank covariance
/// with `rx` is at least as extreme. Ranks are doubled and centred so the
/// statistic is an integer and ties compare exactly.
fn exact_p(rx: &[f64], ry: &[f64]) -> f64 {
    let n = rx.len();
    let centre = |r: &f64| (2.0 * r) as i64 - (n as i64 + 1);
    let cx: Vec<i64> = rx.iter().map(centre).collect();
    let mut cy: Vec<i64> = ry.iter().map(centre).collect();
    let observed: i64 = cx.iter().zip(&cy).map(|(a, b)| a * b).sum::<i64>().abs();

    // Heap's algorithm over every ordering of cy
    let (mut hits, mut total) = (0u64, 0u64);
    let mut c = vec![0usize; n];
    let mut tally = |cy: &[i64]| {
        let s: i64 = cx.iter().zip(cy).map(|(a, b)| a * b).sum();
        total += 1;
        if s.abs() >= observed {
            hits += 1;
        }
    };
    tally(&cy);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                cy.swap(0, i);
            } else {
                cy.swap(c[i], i);
            }
            tally(&cy);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    hits as f64 / total as f64
}

fn t_p(rho: f64, n: usize) -> f64 {
    if rho.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<Spearman, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(AnalysisError::TooShort(n));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let rho = pearson(&rx, &ry).ok_or(AnalysisError::Constant)?;
    let p = if n <= EXACT_MAX_N {
        exact_p(&rx, &ry)
    } else {
        t_p(rho, n)
    };
    Ok(Spearman { rho, p, n })
}

/// Significance marks: `*` p ≤ .05, `**` p ≤ .01, `***` p ≤ .005.
pub fn stars(p: f64) -> &'static str {
    if p <= 0.005 {
        "***"
    } else if p <= 0.01 {
        "**"
    } else if p <= 0.05 {
        "*"
    } else {
        ""
    }
}

/// `max(a/b, b/a)` capped at [`RATIO_CAP`]; 1 if both are zero and the cap
/// if exactly one is.
pub fn pair_ratio(a: f64, b: f64) -> f64 {
    match (a == 0.0, b == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => RATIO_CAP,
        _ => (a / b).max(b / a).min(RATIO_CAP),
    }
}

/// Mean capped ratio between the two weights of an opposing pair.
pub fn opposite_value_consistency(
    profiles: &[HeuristicProfile],
    phase: HeuristicPhase,
    pair: (HeuristicCode, HeuristicCode),
) -> Result<f64, AnalysisError> {
    if profiles.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let sum: f64 = profiles
        .iter()
        .map(|p| pair_ratio(p.weight(phase, pair.0), p.weight(phase, pair.1)))
        .sum();
    Ok(sum / profiles.len() as f64)
}

fn mean_abs_gap(
    profiles: &[HeuristicProfile],
    phase: HeuristicPhase,
    pair: (HeuristicCode, HeuristicCode),
) -> f64 {
    let sum: f64 = profiles
        .iter()
        .map(|p| (p.weight(phase, pair.0) - p.weight(phase, pair.1)).abs())
        .sum();
    sum / profiles.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OvcRow {
    pub phase: HeuristicPhase,
    pub pair: (HeuristicCode, HeuristicCode),
    pub dh_ovc: f64,
    pub pi_ovc: f64,
    /// `dh_ovc - pi_ovc`; positive when direct weights separate the pair more.
    pub ovc_ratio_diff: f64,
    /// Mean `|w1 - w2|` under DH minus the same under PI.
    pub raw_weight_diff: f64,
}

/// One row per opposing pair, in [`OPPOSITE_PAIRS`] order.
pub fn ovc_difference_table(
    dh: &[HeuristicProfile],
    pi: &[HeuristicProfile],
) -> Result<Vec<OvcRow>, AnalysisError> {
    let mut rows = Vec::new();
    for (phase, pairs) in OPPOSITE_PAIRS {
        for pair in pairs {
            let dh_ovc = opposite_value_consistency(dh, phase, pair)?;
            let pi_ovc = opposite_value_consistency(pi, phase, pair)?;
            rows.push(OvcRow {
                phase,
                pair,
                dh_ovc,
                pi_ovc,
                ovc_ratio_diff: dh_ovc - pi_ovc,
                raw_weight_diff: mean_abs_gap(dh, phase, pair) - mean_abs_gap(pi, phase, pair),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), [2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn exact_p_small_cases() {
        // a perfect ordering of 4 is one of 24 permutations, two-sided doubles it
        let s = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.rho, 1.0);
        assert!((s.p - 2.0 / 24.0).abs() < 1e-12);
        let s = spearman(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]).unwrap();
        assert_eq!(s.rho, -1.0);
    }

    #[test]
    fn constant_and_malformed_inputs() {
        assert_eq!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(AnalysisError::Constant)
        );
        assert_eq!(spearman(&[1.0, 2.0], &[1.0, 2.0]), Err(AnalysisError::TooShort(2)));
        assert_eq!(
            spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0]),
            Err(AnalysisError::LengthMismatch(3, 2))
        );
    }

    #[test]
    fn ratio_rules() {
        assert_eq!(pair_ratio(10.0, 5.0), 2.0);
        assert_eq!(pair_ratio(5.0, 10.0), 2.0);
        assert_eq!(pair_ratio(100.0, 0.0), 100.0);
        assert_eq!(pair_ratio(0.0, 0.0), 1.0);
        assert_eq!(pair_ratio(100.0, 0.5), 100.0);
    }

    #[test]
    fn pairs_exist_and_are_disjoint() {
        for (phase, pairs) in OPPOSITE_PAIRS {
            let mut seen = std::collections::HashSet::new();
            for (a, b) in pairs {
                assert!(phase.has(a) && phase.has(b));
                assert!(seen.insert(a) && seen.insert(b));
            }
        }
    }
}
