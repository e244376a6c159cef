use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use peril::game::GameConfig;
use peril::inventory::DEFAULT_LAMBDA;
use peril::llm::{BackendConfig, Method};
use peril::map::MapGraph;
use peril::tournament::{RatingConfig, TournamentConfig};

/// Settings shared by every subcommand, read from a TOML file. Flags given
/// on the command line win over the file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `classic`, `tiny3`, or a path to a map JSON file.
    pub map: String,
    pub lambda: f64,
    pub seed: u64,
    pub rounds: u32,
    pub runs: u32,
    pub k: usize,
    pub method: Option<Method>,
    /// Inventory file, or `starter` for the bundled one.
    pub inventory: Option<String>,
    pub out: PathBuf,
    pub backend: BackendConfig,
    pub game: GameConfig,
    pub rating: RatingConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TournamentConfig::default();
        Self {
            map: "classic".into(),
            lambda: DEFAULT_LAMBDA,
            seed: 0,
            rounds: t.rounds,
            runs: 2,
            k: 50,
            method: None,
            inventory: None,
            out: PathBuf::from("out"),
            backend: BackendConfig::default(),
            game: t.game,
            rating: t.rating,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            bail!("lambda must be positive, got {}", self.lambda);
        }
        if self.rounds == 0 {
            bail!("rounds must be at least 1");
        }
        if self.runs == 0 {
            bail!("runs must be at least 1");
        }
        if !is_builtin_map(&self.map) && !Path::new(&self.map).is_file() {
            bail!("map file {} does not exist", self.map);
        }
        if let Some(inv) = &self.inventory {
            if inv != "starter" && !Path::new(inv).is_file() {
                bail!("inventory file {inv} does not exist");
            }
        }
        self.rating
            .validate()
            .map_err(|e| anyhow::anyhow!("rating: {e}"))?;
        Ok(())
    }

    pub fn load_map(&self) -> Result<Arc<MapGraph>> {
        let map = match self.map.as_str() {
            "classic" => MapGraph::classic_world(),
            "tiny3" => MapGraph::tiny3(),
            path => MapGraph::load(path).with_context(|| format!("loading map {path}"))?,
        };
        Ok(Arc::new(map))
    }

    pub fn tournament(&self) -> TournamentConfig {
        TournamentConfig {
            rounds: self.rounds,
            game: self.game.clone(),
            rating: self.rating,
        }
    }
}

fn is_builtin_map(name: &str) -> bool {
    matches!(name, "classic" | "tiny3")
}
