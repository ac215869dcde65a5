//! Behaviors, catalogs, distributions and the agent's reflective memory.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum allowed |Σp − 1| for a constructed [`BehaviorDistribution`].
pub const NORMALIZATION_EPSILON: f64 = 1e-9;

/// Default acceptance window for generator-produced distributions.
pub const DEFAULT_SUM_TOLERANCE: f64 = 0.05;

/// The six social-media behaviors, in canonical order.
pub const SOCIAL_MEDIA_BEHAVIORS: [&str; 6] = [
    "liking",
    "bookmarking",
    "sharing",
    "commenting",
    "browsing",
    "downloading",
];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Behavior {
    id: String,
    index: usize,
}

impl Behavior {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn index(&self) -> usize {
        self.index
    }
}

/// Ordered, immutable list of behaviors. The order is canonical for every
/// probability vector, trace file and keyed hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct BehaviorCatalog {
    behaviors: Vec<Behavior>,
}

impl BehaviorCatalog {
    pub fn new<I, S>(ids: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut behaviors: Vec<Behavior> = Vec::new();
        for (index, id) in ids.into_iter().enumerate() {
            let id = id.into();
            if id.is_empty() {
                return Err(Error::EmptyBehaviorId);
            }
            if behaviors.iter().any(|b| b.id == id) {
                return Err(Error::DuplicateBehavior(id));
            }
            behaviors.push(Behavior { id, index });
        }
        if behaviors.len() < 2 {
            return Err(Error::CatalogTooSmall(behaviors.len()));
        }
        Ok(BehaviorCatalog { behaviors })
    }

    /// liking, bookmarking, sharing, commenting, browsing, downloading.
    pub fn social_media() -> Self {
        Self::new(SOCIAL_MEDIA_BEHAVIORS).expect("built-in catalog is valid")
    }

    pub fn len(&self) -> usize {
        self.behaviors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.behaviors.is_empty()
    }

    pub fn behaviors(&self) -> &[Behavior] {
        &self.behaviors
    }

    pub fn get(&self, index: usize) -> Option<&Behavior> {
        self.behaviors.get(index)
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.behaviors
            .iter()
            .position(|b| b.id == id)
            .ok_or_else(|| Error::UnknownBehavior(id.to_string()))
    }

    pub fn behavior(&self, id: &str) -> Result<&Behavior> {
        self.index_of(id).map(|i| &self.behaviors[i])
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> + '_ {
        self.behaviors.iter().map(|b| b.id.as_str())
    }
}

impl TryFrom<Vec<String>> for BehaviorCatalog {
    type Error = Error;

    fn try_from(ids: Vec<String>) -> Result<Self> {
        Self::new(ids)
    }
}

impl From<BehaviorCatalog> for Vec<String> {
    fn from(c: BehaviorCatalog) -> Self {
        c.behaviors.into_iter().map(|b| b.id).collect()
    }
}

/// A normalized probability vector aligned to catalog order.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct BehaviorDistribution {
    probs: Vec<f64>,
}

impl BehaviorDistribution {
    /// Validates an already-normalized vector: entries finite and non-negative,
    /// sum within [`NORMALIZATION_EPSILON`] of one.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let mut sum = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            check_entry(&i.to_string(), p)?;
            sum += p;
        }
        if probs.len() < 2 {
            return Err(Error::CatalogTooSmall(probs.len()));
        }
        if (sum - 1.0).abs() > NORMALIZATION_EPSILON {
            return Err(Error::SumOutOfTolerance {
                sum,
                tolerance: NORMALIZATION_EPSILON,
            });
        }
        Ok(BehaviorDistribution { probs })
    }

    /// Rescales any non-negative vector with a positive sum.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let mut sum = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            check_entry(&i.to_string(), w)?;
            sum += w;
        }
        if sum <= 0.0 {
            return Err(Error::ZeroSum);
        }
        if weights.len() < 2 {
            return Err(Error::CatalogTooSmall(weights.len()));
        }
        Ok(BehaviorDistribution {
            probs: weights.iter().map(|w| w / sum).collect(),
        })
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::CatalogTooSmall(m));
        }
        Ok(BehaviorDistribution {
            probs: alloc::vec![1.0 / m as f64; m],
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    /// Keyed view of the distribution, for feeding back into
    /// [`normalize_distribution`].
    pub fn to_map(&self, catalog: &BehaviorCatalog) -> BTreeMap<String, f64> {
        catalog
            .ids()
            .zip(self.probs.iter())
            .map(|(id, &p)| (id.to_string(), p))
            .collect()
    }
}

impl<'de> Deserialize<'de> for BehaviorDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let probs = Vec::<f64>::deserialize(d)?;
        BehaviorDistribution::new(probs).map_err(serde::de::Error::custom)
    }
}

fn check_entry(id: &str, p: f64) -> Result<()> {
    if !p.is_finite() {
        return Err(Error::NonFiniteProbability(id.to_string()));
    }
    if p < 0.0 {
        return Err(Error::NegativeProbability {
            id: id.to_string(),
            value: p,
        });
    }
    Ok(())
}

/// Turns a generator's keyed probabilities into a catalog-aligned distribution.
///
/// The raw sum must lie within `1 ± tolerance`; pass `f64::INFINITY` to
/// renormalize any vector with a positive sum. Ratios between entries are kept.
pub fn normalize_distribution(
    raw: &BTreeMap<String, f64>,
    catalog: &BehaviorCatalog,
    tolerance: f64,
) -> Result<BehaviorDistribution> {
    if let Some(extra) = raw.keys().find(|k| catalog.index_of(k).is_err()) {
        return Err(Error::UnknownBehavior(extra.clone()));
    }
    let mut weights = Vec::with_capacity(catalog.len());
    for id in catalog.ids() {
        let &p = raw
            .get(id)
            .ok_or_else(|| Error::MissingBehavior(id.to_string()))?;
        check_entry(id, p)?;
        weights.push(p);
    }
    let sum: f64 = weights.iter().sum();
    if sum == 0.0 {
        return Err(Error::ZeroSum);
    }
    if (sum - 1.0).abs() > tolerance {
        return Err(Error::SumOutOfTolerance { sum, tolerance });
    }
    Ok(BehaviorDistribution {
        probs: weights.into_iter().map(|w| w / sum).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub round: u64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub behavior_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryRecord {
    pub round: u64,
    pub event: Event,
    pub behavior: Behavior,
    pub action: Action,
}

/// Reflective memory: one record per completed round, rounds 1, 2, ….
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Memory {
    records: Vec<MemoryRecord>,
}

impl Memory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, record: MemoryRecord) -> Result<()> {
        if record.round != self.records.len() as u64 + 1 {
            return Err(Error::RoundMismatch {
                len: self.records.len(),
                got: record.round,
            });
        }
        self.records.push(record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[MemoryRecord] {
        &self.records
    }

    /// The last `window` records, oldest first.
    pub fn recent(&self, window: usize) -> &[MemoryRecord] {
        let start = self.records.len().saturating_sub(window);
        &self.records[start..]
    }
}
