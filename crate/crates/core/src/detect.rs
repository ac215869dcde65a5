//! Watermark detection by a one-sided binomial z-test.
//!
//! Under the null (no watermark) each round's selected behavior lands in the
//! recomputed guided subset with probability `p0 = n / m`, so the hit count
//! `X` over `N` rounds is `Binomial(N, p0)` and
//! `z = (X - N p0) / sqrt(N p0 (1 - p0))`. A trace is flagged when `z > tau`.
//! No continuity correction is applied.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::behavior::{BehaviorCatalog, BehaviorDistribution};
use crate::error::{Error, Result};
use crate::guidance::{
    params_for_round, select_guided_subset, GuidanceConfig, GuidanceMode, GuidedSubset,
    WatermarkKey,
};
use crate::sampler::SamplerState;
use crate::trace::{check_contiguous, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    /// Decision threshold; authoritative.
    pub tau: f64,
    /// Nominal significance level, informational only.
    pub alpha: f64,
    pub guidance: GuidanceConfig,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            tau: 2.0,
            alpha: 0.05,
            guidance: GuidanceConfig::default(),
        }
    }
}

impl DetectionConfig {
    pub fn mode(&self) -> GuidanceMode {
        self.guidance.mode
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub hits: u64,
    pub rounds: u64,
    /// Null hit probability; the per-round mean in `PerRoundN` mode.
    pub p0: f64,
    pub mu0: f64,
    pub sigma0: f64,
    pub z: f64,
    pub tau: f64,
    pub watermarked: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HitCount {
    pub hits: u64,
    pub per_round_p0: Vec<f64>,
}

/// Recomputes each round's guided subset from `key` and counts the rounds whose
/// selected behavior falls inside it.
pub fn count_guided_hits(
    trace: &Trace,
    key: WatermarkKey,
    config: &DetectionConfig,
    catalog: &BehaviorCatalog,
) -> Result<HitCount> {
    check_contiguous(&trace.records)?;
    let m = catalog.len();
    let mut hits = 0;
    let mut per_round_p0 = Vec::with_capacity(trace.records.len());
    for record in &trace.records {
        let selected = catalog.index_of(&record.selected)?;
        let params = params_for_round(key, record.round, &config.guidance, m)?;
        let subset = select_guided_subset(catalog, key, record.round, params.n)?;
        if subset.contains(selected) {
            hits += 1;
        }
        per_round_p0.push(params.n as f64 / m as f64);
    }
    Ok(HitCount { hits, per_round_p0 })
}

pub fn z_statistic(hits: u64, rounds: u64, p0: f64) -> Result<f64> {
    if rounds == 0 {
        return Err(Error::NoRounds);
    }
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::DegenerateNull(p0));
    }
    let n = rounds as f64;
    Ok((hits as f64 - n * p0) / libm::sqrt(n * p0 * (1.0 - p0)))
}

pub fn detect(
    trace: &Trace,
    key: WatermarkKey,
    config: &DetectionConfig,
    catalog: &BehaviorCatalog,
) -> Result<DetectionReport> {
    let HitCount { hits, per_round_p0 } = count_guided_hits(trace, key, config, catalog)?;
    let rounds = per_round_p0.len() as u64;
    let (p0, mu0, sigma0, z) = match config.mode() {
        GuidanceMode::FixedN => {
            let p0 = per_round_p0[0];
            let z = z_statistic(hits, rounds, p0)?;
            let n = rounds as f64;
            (p0, n * p0, libm::sqrt(n * p0 * (1.0 - p0)), z)
        }
        GuidanceMode::PerRoundN => {
            let mu0: f64 = per_round_p0.iter().sum();
            let var: f64 = per_round_p0.iter().map(|p| p * (1.0 - p)).sum();
            if var <= 0.0 {
                return Err(Error::DegenerateNull(mu0 / rounds as f64));
            }
            let sigma0 = libm::sqrt(var);
            (mu0 / rounds as f64, mu0, sigma0, (hits as f64 - mu0) / sigma0)
        }
    };
    Ok(DetectionReport {
        hits,
        rounds,
        p0,
        mu0,
        sigma0,
        z,
        tau: config.tau,
        watermarked: z > config.tau,
    })
}

/// Monte-Carlo false-positive rate: simulates `trials` null traces of
/// `rounds` Bernoulli(`p0`) hits and returns the fraction with `z > tau`.
pub fn calibrate_fpr(
    config: &DetectionConfig,
    rounds: u64,
    p0: f64,
    trials: u64,
    sampler: &mut SamplerState,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1"));
    }
    // validates p0 and rounds once up front
    z_statistic(0, rounds, p0)?;
    let mut alarms = 0u64;
    for _ in 0..trials {
        let hits = (0..rounds).filter(|_| sampler.next_uniform() < p0).count() as u64;
        if z_statistic(hits, rounds, p0)? > config.tau {
            alarms += 1;
        }
    }
    Ok(alarms as f64 / trials as f64)
}

/// Exact null false-positive rate: `P[z(X) > tau]` for `X ~ Binomial(rounds, p0)`.
pub fn exact_null_fpr(tau: f64, rounds: u64, p0: f64) -> Result<f64> {
    z_statistic(0, rounds, p0)?;
    let n = rounds as f64;
    let log_n_fact = libm::lgamma(n + 1.0);
    let mut tail = 0.0;
    for x in 0..=rounds {
        if z_statistic(x, rounds, p0)? > tau {
            let k = x as f64;
            let log_pmf = log_n_fact - libm::lgamma(k + 1.0) - libm::lgamma(n - k + 1.0)
                + k * libm::log(p0)
                + (n - k) * libm::log(1.0 - p0);
            tail += libm::exp(log_pmf);
        }
    }
    Ok(tail)
}

/// Post-bias probability that the sampled behavior is guided:
/// `(1 + gamma) m_g / (1 + gamma m_g)` with `m_g` the pre-bias guided mass.
pub fn expected_hit_rate(dist: &BehaviorDistribution, subset: &GuidedSubset, gamma: f64) -> f64 {
    let guided_mass: f64 = subset
        .indices()
        .iter()
        .filter_map(|&i| dist.probs().get(i))
        .sum();
    (1.0 + gamma) * guided_mass / (1.0 + gamma * guided_mass)
}
