use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use peril::analysis::{
    feature_rating_correlations, leaderboard_extremes, mean_weights, ovc_difference_table,
    weight_correlations, AnalysisReport, CorrelationColumn,
};
use peril::heuristics::HeuristicProfile;
use peril::inventory::Inventory;
use peril::io::{read_json, read_jsonl, write_json, write_jsonl};
use peril::llm::{
    annotate_persona, build_backend, elicit_profile, AuditLog, AuditedBackend, Backend, Method,
    ReplayBackend,
};
use peril::persona::{
    builtin_corpus, greedy_select, load_corpus, load_ratings, save_corpus, save_ratings,
    Persona, RatingRecord,
};
use peril::tournament::{load_log, replay_match, run_seed, run_tournament, Leaderboard, TournamentConfig};

use crate::config::RunConfig;
use crate::{BackendArgs, Outcome};

/// A persona a command had to leave out, and why.
#[derive(Debug, Serialize, Deserialize)]
struct Skipped {
    persona_id: String,
    error: String,
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    std::fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating output directory {}", cfg.out.display()))?;
    Ok(&cfg.out)
}

fn corpus_or_builtin(path: Option<&Path>) -> Result<Vec<Persona>> {
    match path {
        Some(p) => load_corpus(p).with_context(|| format!("loading corpus {}", p.display())),
        None => Ok(builtin_corpus()),
    }
}

fn open_backend(cfg: &RunConfig, args: &BackendArgs, default_audit: PathBuf) -> Result<Arc<dyn Backend>> {
    let inner: Arc<dyn Backend> = match &args.replay {
        Some(path) => Arc::new(
            ReplayBackend::load(path).with_context(|| format!("loading replay {}", path.display()))?,
        ),
        None => build_backend(&cfg.backend)?,
    };
    let audit_path = args.audit.clone().unwrap_or(default_audit);
    let log = AuditLog::create(&audit_path)?;
    log::info!("auditing exchanges to {}", audit_path.display());
    Ok(Arc::new(AuditedBackend::new(inner, Arc::new(log))))
}

/// Writes the skip report and decides the exit status.
fn finish(dir: &Path, name: &str, total: usize, skipped: Vec<Skipped>) -> Result<Outcome> {
    let path = dir.join(name);
    if skipped.is_empty() {
        if path.exists() {
            std::fs::remove_file(&path)?;
        }
        return Ok(Outcome::Complete);
    }
    for s in &skipped {
        log::warn!("skipped {}: {}", s.persona_id, s.error);
    }
    write_jsonl(&path, &skipped)?;
    if skipped.len() == total {
        bail!(
            "every persona failed ({} of {}); see {}",
            skipped.len(),
            total,
            path.display()
        );
    }
    Ok(Outcome::Partial)
}

pub fn annotate(cfg: &RunConfig, corpus: Option<&Path>, args: &BackendArgs) -> Result<Outcome> {
    let corpus = corpus_or_builtin(corpus)?;
    let dir = out_dir(cfg)?;
    let out = dir.join("ratings.jsonl");
    if corpus.is_empty() {
        log::warn!("corpus is empty; writing an empty ratings file");
        save_ratings(&out, &[])?;
        return Ok(Outcome::Complete);
    }
    let backend = open_backend(cfg, args, dir.join("audit_annotate.jsonl"))?;
    let results: Vec<_> = corpus
        .par_iter()
        .enumerate()
        .map(|(i, p)| annotate_persona(backend.as_ref(), p, i + 1))
        .collect();
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (p, r) in corpus.iter().zip(results) {
        match r {
            Ok(ratings) => records.push(RatingRecord {
                persona_id: p.persona_id.clone(),
                ratings,
            }),
            Err(e) => skipped.push(Skipped {
                persona_id: p.persona_id.clone(),
                error: e.to_string(),
            }),
        }
    }
    save_ratings(&out, &records)?;
    log::info!("wrote {} ratings to {}", records.len(), out.display());
    finish(dir, "annotate_skipped.jsonl", corpus.len(), skipped)
}

pub fn select(cfg: &RunConfig, ratings: &Path, corpus: Option<&Path>) -> Result<Outcome> {
    let ratings = load_ratings(ratings).with_context(|| format!("loading {}", ratings.display()))?;
    let corpus: Vec<Persona> = corpus_or_builtin(corpus)?
        .into_iter()
        .filter(|p| ratings.contains_key(&p.persona_id))
        .collect();
    let selection = greedy_select(&corpus, &ratings, cfg.k)?;
    let by_id: HashMap<&str, &Persona> =
        corpus.iter().map(|p| (p.persona_id.as_str(), p)).collect();
    let mut chosen: Vec<Persona> = selection
        .persona_ids
        .iter()
        .map(|id| by_id[id.as_str()].clone())
        .collect();
    chosen.sort_by(|a, b| a.persona_id.cmp(&b.persona_id));
    let dir = out_dir(cfg)?;
    save_corpus(dir.join("personas_selected.jsonl"), &chosen)?;
    write_json(dir.join("selection.json"), &selection)?;
    log::info!(
        "selected {} personas, objective {:.6e}",
        chosen.len(),
        selection.objective
    );
    Ok(Outcome::Complete)
}

fn load_inventory(spec: Option<&str>) -> Result<Option<Inventory>> {
    Ok(match spec {
        None => None,
        Some("starter") => Some(Inventory::starter()),
        Some(path) => Some(Inventory::load(path).with_context(|| format!("loading inventory {path}"))?),
    })
}

pub fn elicit(cfg: &RunConfig, personas: &Path, args: &BackendArgs) -> Result<Outcome> {
    let method = cfg
        .method
        .context("no method given; pass --method dh or --method pi")?;
    let inventory = load_inventory(cfg.inventory.as_deref())?;
    if method == Method::PI && inventory.is_none() {
        bail!("the pi method needs an inventory (--inventory FILE or --inventory starter)");
    }
    let personas = load_corpus(personas).with_context(|| format!("loading {}", personas.display()))?;
    let dir = out_dir(cfg)?;
    let tag = method.to_string().to_lowercase();
    let backend = open_backend(cfg, args, dir.join(format!("audit_elicit_{tag}.jsonl")))?;
    let results: Vec<_> = personas
        .par_iter()
        .map(|p| elicit_profile(backend.as_ref(), p, method, inventory.as_ref(), cfg.lambda))
        .collect();
    let mut profiles = Vec::new();
    let mut skipped = Vec::new();
    for (p, r) in personas.iter().zip(results) {
        match r {
            Ok(profile) => profiles.push(profile),
            Err(e) => skipped.push(Skipped {
                persona_id: p.persona_id.clone(),
                error: e.to_string(),
            }),
        }
    }
    let out = dir.join(format!("profiles_{tag}.jsonl"));
    write_jsonl(&out, &profiles)?;
    log::info!("wrote {} profiles to {}", profiles.len(), out.display());
    finish(dir, &format!("elicit_{tag}_skipped.jsonl"), personas.len(), skipped)
}

/// Written next to the match logs so a game can be replayed later.
#[derive(Debug, Serialize, Deserialize)]
pub struct TournamentInfo {
    pub map: String,
    pub base_seed: u64,
    pub config: TournamentConfig,
    pub runs: Vec<RunInfo>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunInfo {
    pub run: u32,
    pub run_seed: u64,
    pub games: usize,
    pub leaderboard: String,
    pub log: String,
}

fn load_profiles(path: &Path) -> Result<Vec<HeuristicProfile>> {
    read_jsonl(path).with_context(|| format!("loading profiles {}", path.display()))
}

pub fn tournament(cfg: &RunConfig, profiles: &Path) -> Result<Outcome> {
    let profiles = load_profiles(profiles)?;
    let map = cfg.load_map()?;
    let tcfg = cfg.tournament();
    let dir = out_dir(cfg)?;
    let mut runs = Vec::new();
    for r in 1..=cfg.runs {
        let seed = run_seed(cfg.seed, r - 1);
        log::info!("run {r}: {} players, {} rounds, seed {seed}", profiles.len(), tcfg.rounds);
        let result = run_tournament(&profiles, map.clone(), &tcfg, seed)?;
        let board = format!("leaderboard_run{r}.tsv");
        let log = format!("matches_run{r}.ndjson");
        result.leaderboard.save(dir.join(&board))?;
        result.save_log(dir.join(&log))?;
        runs.push(RunInfo {
            run: r,
            run_seed: seed,
            games: result.entries.len(),
            leaderboard: board,
            log,
        });
    }
    write_json(
        dir.join("tournament.json"),
        &TournamentInfo {
            map: cfg.map.clone(),
            base_seed: cfg.seed,
            config: tcfg,
            runs,
        },
    )?;
    Ok(Outcome::Complete)
}

pub struct AnalyzeInputs {
    pub ratings: PathBuf,
    pub leaderboards: Vec<PathBuf>,
    pub dh_profiles: Option<PathBuf>,
    pub pi_profiles: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
}

fn label_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn analyze(cfg: &RunConfig, inputs: &AnalyzeInputs) -> Result<Outcome> {
    let ratings = load_ratings(&inputs.ratings)
        .with_context(|| format!("loading {}", inputs.ratings.display()))?;
    let descriptions: HashMap<String, String> = corpus_or_builtin(inputs.corpus.as_deref())?
        .into_iter()
        .map(|p| (p.persona_id, p.description))
        .collect();
    let mut report = AnalysisReport::default();

    for path in &inputs.leaderboards {
        let board = Leaderboard::load(path).with_context(|| format!("loading {}", path.display()))?;
        let label = label_of(path);
        report.correlations.push(CorrelationColumn {
            label: label.clone(),
            rows: feature_rating_correlations(&ratings, &board)
                .with_context(|| format!("correlating {}", path.display()))?,
        });
        report
            .extremes
            .push((label, leaderboard_extremes(&board, &ratings, &descriptions, 5)));
    }

    let dh = inputs.dh_profiles.as_deref().map(load_profiles).transpose()?;
    let pi = inputs.pi_profiles.as_deref().map(load_profiles).transpose()?;
    for (label, set) in [("DH", &dh), ("PI", &pi)] {
        if let Some(profiles) = set {
            report.mean_weights.push(mean_weights(label, profiles)?);
            report
                .weight_correlations
                .push((label.to_string(), weight_correlations(&ratings, profiles)?));
        }
    }
    if let (Some(dh), Some(pi)) = (&dh, &pi) {
        report.ovc_table = Some(ovc_difference_table(dh, pi)?);
    }
    if inputs.leaderboards.is_empty() && dh.is_none() && pi.is_none() {
        bail!("nothing to analyze: give --leaderboard and/or profile files");
    }

    let dir = out_dir(cfg)?;
    std::fs::write(dir.join("report.txt"), report.render_text())?;
    write_json(dir.join("report.json"), &report)?;
    log::info!("wrote report.txt and report.json to {}", dir.display());
    Ok(Outcome::Complete)
}

pub fn export_replay(cfg: &RunConfig, log_path: &Path, game_id: &str, profiles: &Path) -> Result<Outcome> {
    let entries = load_log(log_path).with_context(|| format!("loading {}", log_path.display()))?;
    let entry = entries
        .iter()
        .find(|e| e.game_id == game_id)
        .with_context(|| format!("no game `{game_id}` in {}", log_path.display()))?;
    let profiles = load_profiles(profiles)?;

    // prefer the settings the tournament was actually run with
    let info_path = log_path
        .parent()
        .unwrap_or(Path::new("."))
        .join("tournament.json");
    let (map_spec, game) = if info_path.is_file() {
        let info: TournamentInfo = read_json(&info_path)?;
        (info.map, info.config.game)
    } else {
        (cfg.map.clone(), cfg.game.clone())
    };
    let map = RunConfig {
        map: map_spec,
        ..cfg.clone()
    }
    .load_map()?;

    let record = replay_match(entry, &profiles, map, &game)?;
    if record.outcome != entry.outcome || record.turn_count != entry.turn_count {
        bail!(
            "replay of {game_id} diverged from the log (profiles or settings differ from the original run)"
        );
    }
    let dir = out_dir(cfg)?;
    let out = dir.join(format!("replay_{game_id}.json"));
    write_json(&out, &record)?;
    log::info!("wrote {} snapshots to {}", record.snapshots.len(), out.display());
    Ok(Outcome::Complete)
}
