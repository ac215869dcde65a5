//! Keyed per-round guidance: bias strength, subset size and the guided subset.
//!
//! Everything here is a pure function of the key, the round and the catalog,
//! so the detector recomputes exactly what the embedder used.
//!
//! The keyed hash is normative:
//!
//! ```text
//! prf(key, round, label) = first 8 bytes, big-endian, of
//!     SHA-256( be64(key) || be64(round) || utf8(label) )
//! ```

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::behavior::BehaviorCatalog;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WatermarkKey(pub u64);

impl From<u64> for WatermarkKey {
    fn from(v: u64) -> Self {
        WatermarkKey(v)
    }
}

pub fn prf(key: WatermarkKey, round: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(key.0.to_be_bytes());
    h.update(round.to_be_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(out)
}

/// How the guided-subset size evolves over a trace.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuidanceMode {
    /// `n` is derived once from round 0 and reused, so the null hit
    /// probability is constant across the trace.
    #[default]
    FixedN,
    /// `n` is re-derived every round.
    PerRoundN,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceConfig {
    pub gamma_min: f64,
    pub n_min: usize,
    pub gamma_granularity: u64,
    /// Replaces the derived bias strength (floor included) when set.
    pub gamma_override: Option<f64>,
    pub mode: GuidanceMode,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        GuidanceConfig {
            gamma_min: 0.5,
            n_min: 3,
            gamma_granularity: 100,
            gamma_override: None,
            mode: GuidanceMode::FixedN,
        }
    }
}

impl GuidanceConfig {
    pub fn validate(&self, m: usize) -> Result<()> {
        if !self.gamma_min.is_finite() || self.gamma_min < 0.0 {
            return Err(Error::InvalidConfig("gamma_min must be a finite value >= 0"));
        }
        if self.n_min == 0 {
            return Err(Error::InvalidConfig("n_min must be at least 1"));
        }
        if self.gamma_granularity == 0 {
            return Err(Error::InvalidConfig("gamma_granularity must be positive"));
        }
        if let Some(g) = self.gamma_override {
            if !g.is_finite() || g < 0.0 {
                return Err(Error::InvalidConfig("gamma_override must be a finite value >= 0"));
            }
        }
        if m < 2 {
            return Err(Error::CatalogTooSmall(m));
        }
        if self.n_min > m - 1 {
            return Err(Error::InvalidConfig("n_min exceeds catalog size - 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceParams {
    pub gamma: f64,
    pub n: usize,
    pub round: u64,
    pub key: WatermarkKey,
}

/// Indices of the guided behaviors, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GuidedSubset {
    indices: Vec<usize>,
}

impl GuidedSubset {
    /// Builds a subset of a size-`m` catalog. Duplicates are removed.
    pub fn new(mut indices: Vec<usize>, m: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&bad) = indices.iter().find(|&&i| i >= m) {
            return Err(Error::SubsetSizeOutOfRange { n: bad + 1, max: m });
        }
        Ok(GuidedSubset { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }
}

/// Raw key-derived bias strength and subset size for one round, floors applied
/// and `n` clamped to `m - 1`.
pub fn derive_params(
    key: WatermarkKey,
    round: u64,
    config: &GuidanceConfig,
    m: usize,
) -> Result<GuidanceParams> {
    config.validate(m)?;
    let gamma_raw = (prf(key, round, "gamma") % config.gamma_granularity) as f64
        / config.gamma_granularity as f64;
    let n_raw = 1 + (prf(key, round, "n") % m as u64) as usize;
    Ok(GuidanceParams {
        gamma: floor_gamma(gamma_raw, config.gamma_min),
        n: clamp_n(n_raw, config.n_min, m),
        round,
        key,
    })
}

pub(crate) fn floor_gamma(gamma_raw: f64, gamma_min: f64) -> f64 {
    gamma_raw.max(gamma_min)
}

pub(crate) fn clamp_n(n_raw: usize, n_min: usize, m: usize) -> usize {
    n_raw.max(n_min).min(m - 1)
}

/// Parameters actually used in `round`: applies the mode (fixed or per-round
/// `n`) and the optional bias override on top of [`derive_params`].
pub fn params_for_round(
    key: WatermarkKey,
    round: u64,
    config: &GuidanceConfig,
    m: usize,
) -> Result<GuidanceParams> {
    let mut params = derive_params(key, round, config, m)?;
    if config.mode == GuidanceMode::FixedN {
        params.n = derive_params(key, 0, config, m)?.n;
    }
    if let Some(g) = config.gamma_override {
        params.gamma = g;
    }
    Ok(params)
}

/// Hash-ranks every behavior by `prf(key, round, "subset:" + id)` and keeps the
/// `n` lowest ranks; ties go to the lower catalog index.
pub fn select_guided_subset(
    catalog: &BehaviorCatalog,
    key: WatermarkKey,
    round: u64,
    n: usize,
) -> Result<GuidedSubset> {
    let m = catalog.len();
    if n == 0 || n > m - 1 {
        return Err(Error::SubsetSizeOutOfRange { n, max: m - 1 });
    }
    let mut ranked: Vec<(u64, usize)> = catalog
        .behaviors()
        .iter()
        .map(|b| (prf(key, round, &format!("subset:{}", b.id())), b.index()))
        .collect();
    ranked.sort_unstable();
    let mut indices: Vec<usize> = ranked.into_iter().take(n).map(|(_, i)| i).collect();
    indices.sort_unstable();
    Ok(GuidedSubset { indices })
}
