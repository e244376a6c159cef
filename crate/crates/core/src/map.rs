//! Board definition: regions, zones and the land/water adjacency graph.
//!
//! Maps are loaded from JSON files of the form
//!
//! ```json
//! {
//!   "name": "tiny-3",
//!   "regions":   [{"id": "A", "name": "Alpha"}, ...],
//!   "zones":     [{"id": "Z", "name": "Zone", "bonus": 1, "regions": ["A", ...]}],
//!   "adjacency": [{"a": "A", "b": "B", "kind": "land"}, ...]
//! }
//! ```
//!
//! Every loaded [`MapGraph`] has passed [`MapGraph::from_spec`] validation, so
//! the rest of the engine may assume a connected, symmetric, irreflexive graph
//! whose regions each belong to exactly one non-empty zone.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const CLASSIC_WORLD: &str = include_str!("../assets/classic_world.json");
const TINY3: &str = include_str!("../assets/tiny3.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ZoneId(pub usize);

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Land,
    Water,
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("failed to read map file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse map file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate region id `{0}`")]
    DuplicateRegion(String),
    #[error("duplicate zone id `{0}`")]
    DuplicateZone(String),
    #[error("unknown region `{region}` referenced by {context}")]
    UnknownRegion { region: String, context: String },
    #[error("region in multiple zones: `{region}` is listed by `{first}` and `{second}`")]
    RegionInMultipleZones {
        region: String,
        first: String,
        second: String,
    },
    #[error("orphan region `{0}` belongs to no zone")]
    OrphanRegion(String),
    #[error("zone `{0}` has no regions")]
    EmptyZone(String),
    #[error("self-loop on region `{0}`")]
    SelfLoop(String),
    #[error("asymmetric adjacency between `{a}` and `{b}`: link listed with conflicting kinds")]
    ConflictingLink { a: String, b: String },
    #[error("disconnected map: `{unreachable}` cannot be reached from `{from}`")]
    Disconnected { from: String, unreachable: String },
    #[error("map has no regions")]
    Empty,
}

/// On-disk representation of a map.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapSpec {
    pub name: String,
    #[serde(default = "default_mission")]
    pub mission: String,
    pub regions: Vec<RegionSpec>,
    pub zones: Vec<ZoneSpec>,
    pub adjacency: Vec<LinkSpec>,
}

fn default_mission() -> String {
    "world_domination".to_string()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionSpec {
    pub id: String,
    pub name: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZoneSpec {
    pub id: String,
    pub name: String,
    pub bonus: u32,
    pub regions: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinkSpec {
    pub a: String,
    pub b: String,
    pub kind: LinkKind,
}

#[derive(Clone, Debug)]
pub struct Region {
    pub key: String,
    pub name: String,
    pub zone: ZoneId,
}

#[derive(Clone, Debug)]
pub struct Zone {
    pub key: String,
    pub name: String,
    pub bonus: u32,
    pub members: Vec<RegionId>,
}

/// A validated board.
#[derive(Clone, Debug)]
pub struct MapGraph {
    name: String,
    mission: String,
    regions: Vec<Region>,
    zones: Vec<Zone>,
    neighbors: Vec<Vec<(RegionId, LinkKind)>>,
    boundary: Vec<bool>,
    spec: MapSpec,
}

impl MapGraph {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, MapError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, MapError> {
        let spec: MapSpec = serde_json::from_str(text)?;
        Self::from_spec(spec)
    }

    /// The shipped 42-region, 6-zone world board.
    pub fn classic_world() -> Self {
        Self::from_json(CLASSIC_WORLD).expect("bundled classic map is valid")
    }

    /// Three regions in a chain `A - B - C`, one zone.
    pub fn tiny3() -> Self {
        Self::from_json(TINY3).expect("bundled tiny map is valid")
    }

    pub fn from_spec(spec: MapSpec) -> Result<Self, MapError> {
        if spec.regions.is_empty() {
            return Err(MapError::Empty);
        }
        let mut index: HashMap<&str, RegionId> = HashMap::new();
        for (i, r) in spec.regions.iter().enumerate() {
            if index.insert(r.id.as_str(), RegionId(i)).is_some() {
                return Err(MapError::DuplicateRegion(r.id.clone()));
            }
        }

        let mut zone_of: Vec<Option<ZoneId>> = vec![None; spec.regions.len()];
        let mut zones = Vec::with_capacity(spec.zones.len());
        let mut zone_keys = HashMap::new();
        for (zi, z) in spec.zones.iter().enumerate() {
            if zone_keys.insert(z.id.as_str(), zi).is_some() {
                return Err(MapError::DuplicateZone(z.id.clone()));
            }
            if z.regions.is_empty() {
                return Err(MapError::EmptyZone(z.id.clone()));
            }
            let mut members = Vec::with_capacity(z.regions.len());
            for rk in &z.regions {
                let rid = *index.get(rk.as_str()).ok_or_else(|| MapError::UnknownRegion {
                    region: rk.clone(),
                    context: format!("zone `{}`", z.id),
                })?;
                if let Some(prev) = zone_of[rid.0] {
                    return Err(MapError::RegionInMultipleZones {
                        region: rk.clone(),
                        first: spec.zones[prev.0].id.clone(),
                        second: z.id.clone(),
                    });
                }
                zone_of[rid.0] = Some(ZoneId(zi));
                members.push(rid);
            }
            zones.push(Zone {
                key: z.id.clone(),
                name: z.name.clone(),
                bonus: z.bonus,
                members,
            });
        }

        let mut regions = Vec::with_capacity(spec.regions.len());
        for (i, r) in spec.regions.iter().enumerate() {
            let zone = zone_of[i].ok_or_else(|| MapError::OrphanRegion(r.id.clone()))?;
            regions.push(Region {
                key: r.id.clone(),
                name: r.name.clone(),
                zone,
            });
        }

        let mut links: BTreeMap<(RegionId, RegionId), LinkKind> = BTreeMap::new();
        for l in &spec.adjacency {
            let lookup = |k: &String| {
                index.get(k.as_str()).copied().ok_or_else(|| MapError::UnknownRegion {
                    region: k.clone(),
                    context: "adjacency".to_string(),
                })
            };
            let (a, b) = (lookup(&l.a)?, lookup(&l.b)?);
            if a == b {
                return Err(MapError::SelfLoop(l.a.clone()));
            }
            let key = (a.min(b), a.max(b));
            match links.get(&key) {
                Some(kind) if *kind != l.kind => {
                    return Err(MapError::ConflictingLink {
                        a: l.a.clone(),
                        b: l.b.clone(),
                    })
                }
                _ => {
                    links.insert(key, l.kind);
                }
            }
        }
        let mut neighbors = vec![Vec::new(); regions.len()];
        for (&(a, b), &kind) in &links {
            neighbors[a.0].push((b, kind));
            neighbors[b.0].push((a, kind));
        }
        for n in &mut neighbors {
            n.sort_by_key(|(r, _)| *r);
        }

        // connectivity from region 0
        let mut seen = vec![false; regions.len()];
        let mut queue = VecDeque::from([RegionId(0)]);
        seen[0] = true;
        while let Some(r) = queue.pop_front() {
            for &(n, _) in &neighbors[r.0] {
                if !seen[n.0] {
                    seen[n.0] = true;
                    queue.push_back(n);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(MapError::Disconnected {
                from: regions[0].key.clone(),
                unreachable: regions[i].key.clone(),
            });
        }

        let boundary = (0..regions.len())
            .map(|i| {
                neighbors[i]
                    .iter()
                    .any(|(n, _)| regions[n.0].zone != regions[i].zone)
            })
            .collect();

        Ok(Self {
            name: spec.name.clone(),
            mission: spec.mission.clone(),
            regions,
            zones,
            neighbors,
            boundary,
            spec,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Mission tag carried by the map file. Only `world_domination` is played.
    pub fn mission(&self) -> &str {
        &self.mission
    }

    pub fn spec(&self) -> &MapSpec {
        &self.spec
    }

    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    pub fn regions(&self) -> impl ExactSizeIterator<Item = RegionId> {
        (0..self.regions.len()).map(RegionId)
    }

    pub fn region(&self, id: RegionId) -> &Region {
        &self.regions[id.0]
    }

    pub fn region_id(&self, key: &str) -> Option<RegionId> {
        self.regions.iter().position(|r| r.key == key).map(RegionId)
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn zone(&self, id: ZoneId) -> &Zone {
        &self.zones[id.0]
    }

    pub fn zone_of(&self, id: RegionId) -> ZoneId {
        self.regions[id.0].zone
    }

    pub fn neighbors(&self, id: RegionId) -> impl Iterator<Item = RegionId> + '_ {
        self.neighbors[id.0].iter().map(|(r, _)| *r)
    }

    pub fn links(&self, id: RegionId) -> &[(RegionId, LinkKind)] {
        &self.neighbors[id.0]
    }

    pub fn degree(&self, id: RegionId) -> usize {
        self.neighbors[id.0].len()
    }

    pub fn adjacent(&self, a: RegionId, b: RegionId) -> bool {
        self.neighbors[a.0].binary_search_by_key(&b, |(r, _)| *r).is_ok()
    }

    /// A region with at least one neighbour in a different zone.
    pub fn on_zone_boundary(&self, id: RegionId) -> bool {
        self.boundary[id.0]
    }
}
