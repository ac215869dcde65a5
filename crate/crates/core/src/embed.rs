//! Watermark-guided behavior selection.

use alloc::vec::Vec;

use crate::behavior::{Behavior, BehaviorCatalog, BehaviorDistribution};
use crate::error::{Error, Result};
use crate::guidance::{params_for_round, select_guided_subset, GuidanceConfig, GuidanceParams, GuidedSubset, WatermarkKey};
use crate::sampler::SamplerState;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedOutcome {
    pub selected: Behavior,
    pub biased_distribution: BehaviorDistribution,
    pub guided_subset: GuidedSubset,
    pub params: GuidanceParams,
}

/// Multiplies every guided probability by `1 + gamma` and renormalizes.
pub fn apply_bias(
    dist: &BehaviorDistribution,
    subset: &GuidedSubset,
    gamma: f64,
) -> Result<BehaviorDistribution> {
    if gamma.is_nan() || gamma < 0.0 {
        return Err(Error::NegativeGamma(gamma));
    }
    let m = dist.len();
    if let Some(&i) = subset.indices().iter().find(|&&i| i >= m) {
        return Err(Error::SubsetSizeOutOfRange { n: i + 1, max: m });
    }
    let boosted: Vec<f64> = dist
        .probs()
        .iter()
        .enumerate()
        .map(|(i, &p)| if subset.contains(i) { p + gamma * p } else { p })
        .collect();
    let total: f64 = boosted.iter().sum();
    BehaviorDistribution::new(boosted.into_iter().map(|p| p / total).collect())
}

/// Inverse-CDF lookup: first index whose cumulative probability exceeds `u`.
pub fn sample_index(dist: &BehaviorDistribution, u: f64) -> usize {
    let mut cumulative = 0.0;
    for (i, &p) in dist.probs().iter().enumerate() {
        cumulative += p;
        if cumulative > u {
            return i;
        }
    }
    // rounding left the total just below u; take the last reachable entry
    dist.probs()
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(dist.len() - 1)
}

/// Draws one uniform from `sampler` and maps it through [`sample_index`].
pub fn sample_behavior<'c>(
    dist: &BehaviorDistribution,
    catalog: &'c BehaviorCatalog,
    sampler: &mut SamplerState,
) -> Result<&'c Behavior> {
    if dist.len() != catalog.len() {
        return Err(Error::LengthMismatch {
            expected: catalog.len(),
            got: dist.len(),
        });
    }
    let i = sample_index(dist, sampler.next_uniform());
    Ok(&catalog.behaviors()[i])
}

/// One round of guided selection: derive parameters, pick the guided subset,
/// bias, renormalize and sample.
pub fn embed_round(
    dist: &BehaviorDistribution,
    catalog: &BehaviorCatalog,
    key: WatermarkKey,
    round: u64,
    config: &GuidanceConfig,
    sampler: &mut SamplerState,
) -> Result<EmbedOutcome> {
    let params = params_for_round(key, round, config, catalog.len())?;
    let guided_subset = select_guided_subset(catalog, key, round, params.n)?;
    let biased_distribution = apply_bias(dist, &guided_subset, params.gamma)?;
    let selected = sample_behavior(&biased_distribution, catalog, sampler)?.clone();
    Ok(EmbedOutcome {
        selected,
        biased_distribution,
        guided_subset,
        params,
    })
}
