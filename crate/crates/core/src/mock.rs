//! Offline stand-in for the LLM: persona-specific base distributions with
//! Dirichlet noise, templated events and actions.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::behavior::{Action, Behavior, BehaviorCatalog, Event, Memory, SOCIAL_MEDIA_BEHAVIORS};
use crate::error::{Error, GeneratorError, Result};
use crate::persona::Persona;
use crate::sampler::SamplerState;
use crate::sim::{Generator, RawDistribution};

/// Default Dirichlet concentration for the mock generator's noise.
pub const DEFAULT_KAPPA: f64 = 50.0;

pub const EVENT_TOPICS: [&str; 10] = [
    "travel",
    "cooking",
    "technology",
    "music",
    "sports",
    "pets",
    "news",
    "fitness",
    "movies",
    "art",
];

// liking, bookmarking, sharing, commenting, browsing, downloading
const BASE_TABLE: [(&str, [f64; 6]); 6] = [
    ("Active + Calm", [0.16, 0.22, 0.16, 0.20, 0.14, 0.12]),
    ("Active + Joyful", [0.26, 0.13, 0.22, 0.22, 0.11, 0.06]),
    ("Active + Sad", [0.15, 0.14, 0.24, 0.22, 0.13, 0.12]),
    ("Inactive + Calm", [0.08, 0.10, 0.04, 0.03, 0.55, 0.20]),
    ("Inactive + Joyful", [0.14, 0.08, 0.06, 0.04, 0.50, 0.18]),
    ("Inactive + Sad", [0.06, 0.06, 0.03, 0.02, 0.65, 0.18]),
];

/// Base behavior weights per persona profile (`"Active + Calm"` etc.).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProfileTable {
    profiles: BTreeMap<String, BTreeMap<String, f64>>,
}

impl Default for ProfileTable {
    fn default() -> Self {
        let profiles = BASE_TABLE
            .iter()
            .map(|(profile, weights)| {
                let row = SOCIAL_MEDIA_BEHAVIORS
                    .iter()
                    .zip(weights)
                    .map(|(id, &w)| (id.to_string(), w))
                    .collect();
                (profile.to_string(), row)
            })
            .collect();
        ProfileTable { profiles }
    }
}

impl ProfileTable {
    pub fn new(profiles: BTreeMap<String, BTreeMap<String, f64>>) -> Self {
        ProfileTable { profiles }
    }

    pub fn profiles(&self) -> &BTreeMap<String, BTreeMap<String, f64>> {
        &self.profiles
    }

    /// Base weights for `persona` aligned to `catalog`, renormalized.
    pub fn base(&self, persona: &Persona, catalog: &BehaviorCatalog) -> Result<Vec<f64>> {
        let profile = persona.profile();
        let row = self
            .profiles
            .get(&profile)
            .ok_or(Error::UnknownProfile(profile))?;
        let dist = crate::behavior::normalize_distribution(row, catalog, f64::INFINITY)?;
        Ok(dist.into_vec())
    }
}

/// Draws `Dirichlet(kappa * base)`; zero entries stay zero. `kappa = None`
/// (or infinite) returns `base` unchanged.
pub fn dirichlet_noise(base: &[f64], kappa: Option<f64>, noise: &mut SamplerState) -> Vec<f64> {
    let kappa = match kappa {
        Some(k) if k.is_finite() => k,
        _ => return base.to_vec(),
    };
    let draws: Vec<f64> = base
        .iter()
        .map(|&p| {
            if p > 0.0 {
                Gamma::new(kappa * p, 1.0)
                    .expect("positive shape")
                    .sample(noise)
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 {
        draws.into_iter().map(|d| d / total).collect()
    } else {
        base.to_vec()
    }
}

pub struct MockGenerator {
    persona: Persona,
    table: ProfileTable,
    kappa: Option<f64>,
    noise: SamplerState,
    topic: &'static str,
}

impl MockGenerator {
    pub fn new(persona: Persona, table: ProfileTable, noise_seed: u64) -> Result<Self> {
        if !table.profiles.contains_key(&persona.profile()) {
            return Err(Error::UnknownProfile(persona.profile()));
        }
        Ok(MockGenerator {
            persona,
            table,
            kappa: Some(DEFAULT_KAPPA),
            noise: SamplerState::new(noise_seed),
            topic: EVENT_TOPICS[0],
        })
    }

    /// `None` disables noise entirely.
    pub fn with_kappa(mut self, kappa: Option<f64>) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn persona(&self) -> &Persona {
        &self.persona
    }

    pub fn sample_distribution(&mut self, catalog: &BehaviorCatalog) -> Result<Vec<f64>> {
        let base = self.table.base(&self.persona, catalog)?;
        Ok(dirichlet_noise(&base, self.kappa, &mut self.noise))
    }
}

fn past_tense(behavior: &str) -> Option<&'static str> {
    Some(match behavior {
        "liking" => "liked",
        "bookmarking" => "bookmarked",
        "sharing" => "shared",
        "commenting" => "commented on",
        "browsing" => "scrolled past",
        "downloading" => "downloaded",
        _ => return None,
    })
}

impl Generator for MockGenerator {
    fn generate_event(
        &mut self,
        persona: &Persona,
        round: u64,
        _memory: &Memory,
    ) -> core::result::Result<Event, GeneratorError> {
        self.topic = EVENT_TOPICS[self.noise.next_below(EVENT_TOPICS.len() as u64) as usize];
        Ok(Event {
            round,
            text: format!("Round {round}: {} encounters a {} post", persona.name, self.topic),
        })
    }

    fn generate_distribution(
        &mut self,
        _event: &Event,
        _memory: &Memory,
        catalog: &BehaviorCatalog,
    ) -> core::result::Result<RawDistribution, GeneratorError> {
        let probs = self.sample_distribution(catalog)?;
        Ok(catalog
            .ids()
            .zip(probs)
            .map(|(id, p)| (id.to_string(), p))
            .collect())
    }

    fn generate_action(
        &mut self,
        _event: &Event,
        behavior: &Behavior,
        _memory: &Memory,
    ) -> core::result::Result<Action, GeneratorError> {
        let name = &self.persona.name;
        let topic = self.topic;
        let text = match (behavior.id(), past_tense(behavior.id())) {
            ("bookmarking", _) => {
                let mut tag = String::from(topic);
                tag[..1].make_ascii_uppercase();
                format!("{name} bookmarked the {topic} post with the tag #{tag}Picks")
            }
            (_, Some(verb)) => format!("{name} {verb} the {topic} post"),
            (id, None) => format!("{name} chose {id} on the {topic} post"),
        };
        Ok(Action {
            behavior_id: behavior.id().to_string(),
            text,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persona::{Activity, Mood};

    #[test]
    fn table_rows_are_normalized() {
        for (profile, row) in ProfileTable::default().profiles() {
            let s: f64 = row.values().sum();
            assert!((s - 1.0).abs() < 1e-12, "{profile}: {s}");
            assert_eq!(row.len(), 6);
        }
    }

    #[test]
    fn ordinal_profile_constraints() {
        let cat = BehaviorCatalog::social_media();
        let table = ProfileTable::default();
        let browse = cat.index_of("browsing").unwrap();
        for p in Persona::all_builtin() {
            let base = table.base(&p, &cat).unwrap();
            let interactive = ["liking", "commenting", "sharing", "bookmarking"]
                .map(|id| base[cat.index_of(id).unwrap()]);
            match p.activity {
                Activity::Inactive => {
                    assert!(base.iter().enumerate().all(|(i, &w)| i == browse || w < base[browse]))
                }
                Activity::Active => assert!(interactive.iter().all(|&w| w > base[browse])),
            }
        }
        // mood only perturbs within the activity class
        let sad = table
            .base(&Persona::builtin(Activity::Inactive, Mood::Sad), &cat)
            .unwrap();
        assert!(sad[browse] >= 0.5);
    }

    #[test]
    fn no_noise_returns_base() {
        let cat = BehaviorCatalog::social_media();
        let p = Persona::builtin(Activity::Inactive, Mood::Sad);
        let base = ProfileTable::default().base(&p, &cat).unwrap();
        let mut g = MockGenerator::new(p, ProfileTable::default(), 1)
            .unwrap()
            .with_kappa(None);
        assert_eq!(g.sample_distribution(&cat).unwrap(), base);
        let mut g2 = MockGenerator::new(Persona::builtin(Activity::Inactive, Mood::Sad), ProfileTable::default(), 1)
            .unwrap()
            .with_kappa(Some(f64::INFINITY));
        assert_eq!(g2.sample_distribution(&cat).unwrap(), base);
    }

    #[test]
    fn noisy_mean_matches_base() {
        let cat = BehaviorCatalog::social_media();
        let p = Persona::builtin(Activity::Active, Mood::Joyful);
        let base = ProfileTable::default().base(&p, &cat).unwrap();
        let mut g = MockGenerator::new(p, ProfileTable::default(), 99).unwrap();
        let mut mean = [0.0; 6];
        let draws = 10_000;
        for _ in 0..draws {
            let d = g.sample_distribution(&cat).unwrap();
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (m, x) in mean.iter_mut().zip(d) {
                *m += x / draws as f64;
            }
        }
        for (m, b) in mean.iter().zip(&base) {
            assert!((m - b).abs() < 0.02, "{m} vs {b}");
        }
    }

    #[test]
    fn unknown_profile() {
        let empty = ProfileTable::new(BTreeMap::new());
        assert!(matches!(
            MockGenerator::new(Persona::builtin(Activity::Active, Mood::Sad), empty, 0),
            Err(Error::UnknownProfile(_))
        ));
    }

    #[test]
    fn zero_base_entries_stay_zero() {
        let mut s = SamplerState::new(4);
        let out = dirichlet_noise(&[0.5, 0.0, 0.5], Some(50.0), &mut s);
        assert_eq!(out[1], 0.0);
    }
}
