use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{spearman, stars, AnalysisError, OvcRow};
use crate::heuristics::{HeuristicCode, HeuristicPhase, HeuristicProfile};
use crate::persona::{Feature, FeatureRatings};
use crate::tournament::Leaderboard;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureCorrelation {
    pub feature: Feature,
    /// `None` when one side is constant.
    pub rho: Option<f64>,
    pub p: Option<f64>,
    pub n: usize,
    pub stars: String,
}

/// Correlations of one leaderboard (a method and run) with every feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationColumn {
    pub label: String,
    pub rows: Vec<FeatureCorrelation>,
}

fn correlate(feature: Feature, x: &[f64], y: &[f64]) -> Result<FeatureCorrelation, AnalysisError> {
    match spearman(x, y) {
        Ok(s) => Ok(FeatureCorrelation {
            feature,
            rho: Some(s.rho),
            p: Some(s.p),
            n: s.n,
            stars: stars(s.p).to_string(),
        }),
        Err(AnalysisError::Constant) => Ok(FeatureCorrelation {
            feature,
            rho: None,
            p: None,
            n: x.len(),
            stars: String::new(),
        }),
        Err(e) => Err(e),
    }
}

/// Spearman correlation of each feature with final mu across the board.
pub fn feature_rating_correlations(
    ratings: &HashMap<String, FeatureRatings>,
    board: &Leaderboard,
) -> Result<Vec<FeatureCorrelation>, AnalysisError> {
    let mut feats = Vec::with_capacity(board.standings.len());
    let mut mus = Vec::with_capacity(board.standings.len());
    for s in &board.standings {
        let r = ratings
            .get(&s.persona_id)
            .ok_or_else(|| AnalysisError::MissingRatings(s.persona_id.clone()))?;
        feats.push(*r);
        mus.push(s.rating.mu);
    }
    Feature::ALL
        .iter()
        .map(|f| {
            let x: Vec<f64> = feats.iter().map(|r| r.get(*f)).collect();
            correlate(*f, &x, &mus)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightCorrelation {
    pub feature: Feature,
    pub phase: HeuristicPhase,
    pub code: HeuristicCode,
    pub rho: Option<f64>,
    pub p: Option<f64>,
    pub stars: String,
}

/// Spearman correlation of each feature with each heuristic weight.
pub fn weight_correlations(
    ratings: &HashMap<String, FeatureRatings>,
    profiles: &[HeuristicProfile],
) -> Result<Vec<WeightCorrelation>, AnalysisError> {
    let rated: Vec<(&FeatureRatings, &HeuristicProfile)> = profiles
        .iter()
        .map(|p| {
            ratings
                .get(&p.persona_id)
                .map(|r| (r, p))
                .ok_or_else(|| AnalysisError::MissingRatings(p.persona_id.clone()))
        })
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for phase in HeuristicPhase::ALL {
        for code in phase.codes() {
            let w: Vec<f64> = rated.iter().map(|(_, p)| p.weight(phase, *code)).collect();
            for f in Feature::ALL {
                let x: Vec<f64> = rated.iter().map(|(r, _)| r.get(f)).collect();
                let c = correlate(f, &x, &w)?;
                out.push(WeightCorrelation {
                    feature: f,
                    phase,
                    code: *code,
                    rho: c.rho,
                    p: c.p,
                    stars: c.stars,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremeRow {
    pub rank: usize,
    pub persona_id: String,
    pub mu: f64,
    pub sigma: f64,
    pub ratings: Option<FeatureRatings>,
    pub description: Option<String>,
}

/// The `k` best and `k` worst entries of a board, best first.
pub fn leaderboard_extremes(
    board: &Leaderboard,
    ratings: &HashMap<String, FeatureRatings>,
    descriptions: &HashMap<String, String>,
    k: usize,
) -> Vec<ExtremeRow> {
    let n = board.standings.len();
    let mut picks: Vec<usize> = (0..k.min(n)).collect();
    picks.extend((n.saturating_sub(k)..n).filter(|i| *i >= k));
    picks
        .into_iter()
        .map(|i| {
            let s = &board.standings[i];
            ExtremeRow {
                rank: i + 1,
                persona_id: s.persona_id.clone(),
                mu: s.rating.mu,
                sigma: s.rating.sigma,
                ratings: ratings.get(&s.persona_id).copied(),
                description: descriptions.get(&s.persona_id).cloned(),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanWeights {
    pub label: String,
    pub overall: f64,
    pub deploy: f64,
    pub attack: f64,
    pub redeploy: f64,
}

/// Average weight of a profile set, overall and per phase. Useful when
/// tuning the inventory scale so both methods land at similar averages.
pub fn mean_weights(label: &str, profiles: &[HeuristicProfile]) -> Result<MeanWeights, AnalysisError> {
    if profiles.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let n = profiles.len() as f64;
    let phase_mean = |ph: HeuristicPhase| {
        profiles
            .iter()
            .map(|p| p.phase_weights(ph).iter().sum::<f64>() / ph.codes().len() as f64)
            .sum::<f64>()
            / n
    };
    Ok(MeanWeights {
        label: label.to_string(),
        overall: profiles.iter().map(|p| p.mean_weight()).sum::<f64>() / n,
        deploy: phase_mean(HeuristicPhase::Deploy),
        attack: phase_mean(HeuristicPhase::Attack),
        redeploy: phase_mean(HeuristicPhase::Redeploy),
    })
}

fn fmt_rho(rho: Option<f64>, stars: &str) -> String {
    match rho {
        Some(r) => format!("{r:.4}{stars}"),
        None => "undefined".to_string(),
    }
}

/// Features down the side, one column per board.
pub fn render_correlations(columns: &[CorrelationColumn]) -> String {
    let mut out = format!("{:<18}", "feature");
    for c in columns {
        let _ = write!(out, "\t{}", c.label);
    }
    out.push('\n');
    for (i, f) in Feature::ALL.iter().enumerate() {
        let _ = write!(out, "{:<18}", f.key());
        for c in columns {
            let cell = c
                .rows
                .get(i)
                .map(|r| fmt_rho(r.rho, &r.stars))
                .unwrap_or_default();
            let _ = write!(out, "\t{cell}");
        }
        out.push('\n');
    }
    out.push_str("* p<=0.05  ** p<=0.01  *** p<=0.005\n");
    out
}

pub fn render_ovc_table(rows: &[OvcRow]) -> String {
    let mut out = String::from("phase\tpair\tdh_ovc\tpi_ovc\tovc_ratio_diff\traw_weight_diff\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}-{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
            r.phase, r.pair.0, r.pair.1, r.dh_ovc, r.pi_ovc, r.ovc_ratio_diff, r.raw_weight_diff
        );
    }
    out
}

pub fn render_extremes(label: &str, rows: &[ExtremeRow]) -> String {
    let mut out = format!("# {label}\nrank\tpersona_id\tmu\tsigma");
    for f in Feature::ALL {
        let _ = write!(out, "\t{}", f.key());
    }
    out.push_str("\tdescription\n");
    for r in rows {
        let _ = write!(out, "{}\t{}\t{:.4}\t{:.4}", r.rank, r.persona_id, r.mu, r.sigma);
        for f in Feature::ALL {
            match r.ratings {
                Some(rt) => {
                    let _ = write!(out, "\t{}", rt.get(f));
                }
                None => out.push_str("\t-"),
            }
        }
        let _ = writeln!(out, "\t{}", r.description.as_deref().unwrap_or(""));
    }
    out
}

pub fn render_mean_weights(rows: &[MeanWeights]) -> String {
    let mut out = String::from("set\toverall\tdeploy\tattack\tredeploy\n");
    for m in rows {
        let _ = writeln!(
            out,
            "{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
            m.label, m.overall, m.deploy, m.attack, m.redeploy
        );
    }
    out
}

/// Everything `analyze` produces, in machine-readable form.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub correlations: Vec<CorrelationColumn>,
    pub extremes: Vec<(String, Vec<ExtremeRow>)>,
    pub mean_weights: Vec<MeanWeights>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ovc_table: Option<Vec<OvcRow>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weight_correlations: Vec<(String, Vec<WeightCorrelation>)>,
}

impl AnalysisReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        if !self.correlations.is_empty() {
            out.push_str("== Feature vs final rating (Spearman rho) ==\n");
            out.push_str(&render_correlations(&self.correlations));
            out.push('\n');
        }
        for (label, rows) in &self.extremes {
            out.push_str("== Top and bottom performers ==\n");
            out.push_str(&render_extremes(label, rows));
            out.push('\n');
        }
        if !self.mean_weights.is_empty() {
            out.push_str("== Mean heuristic weight ==\n");
            out.push_str(&render_mean_weights(&self.mean_weights));
            out.push('\n');
        }
        if let Some(rows) = &self.ovc_table {
            out.push_str("== Opposite-value consistency, DH minus PI ==\n");
            out.push_str(&render_ovc_table(rows));
            out.push('\n');
        }
        for (label, rows) in &self.weight_correlations {
            let _ = writeln!(out, "== Feature vs heuristic weight: {label} ==");
            out.push_str("phase\tcode");
            for f in Feature::ALL {
                let _ = write!(out, "\t{}", f.key());
            }
            out.push('\n');
            for chunk in rows.chunks(Feature::ALL.len()) {
                let _ = write!(out, "{}\t{}", chunk[0].phase, chunk[0].code);
                for c in chunk {
                    let _ = write!(out, "\t{}", fmt_rho(c.rho, &c.stars));
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}
