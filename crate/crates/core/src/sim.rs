//! The per-agent round loop: event, distribution, guided selection, action,
//! memory update.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::behavior::{
    normalize_distribution, Action, Behavior, BehaviorCatalog, Event, Memory, MemoryRecord,
    DEFAULT_SUM_TOLERANCE,
};
use crate::embed::{embed_round, sample_behavior};
use crate::error::{Error, GeneratorError, Result};
use crate::guidance::{GuidanceConfig, WatermarkKey};
use crate::persona::Persona;
use crate::sampler::SamplerState;
use crate::trace::{Trace, TraceHeader, TraceRecord};

/// Behavior id → probability, as produced by a generator.
pub type RawDistribution = BTreeMap<String, f64>;

/// Source of events, behavior distributions and concrete actions.
///
/// Action generation only ever sees the event, the selected behavior and the
/// memory; watermark parameters never reach it.
pub trait Generator {
    fn generate_event(
        &mut self,
        persona: &Persona,
        round: u64,
        memory: &Memory,
    ) -> Result<Event, GeneratorError>;

    fn generate_distribution(
        &mut self,
        event: &Event,
        memory: &Memory,
        catalog: &BehaviorCatalog,
    ) -> Result<RawDistribution, GeneratorError>;

    fn generate_action(
        &mut self,
        event: &Event,
        behavior: &Behavior,
        memory: &Memory,
    ) -> Result<Action, GeneratorError>;

    /// Allowed |Σp − 1| for this generator's raw distributions.
    fn sum_tolerance(&self) -> f64 {
        DEFAULT_SUM_TOLERANCE
    }
}

impl<G: Generator + ?Sized> Generator for &mut G {
    fn generate_event(&mut self, p: &Persona, r: u64, m: &Memory) -> Result<Event, GeneratorError> {
        (**self).generate_event(p, r, m)
    }

    fn generate_distribution(
        &mut self,
        e: &Event,
        m: &Memory,
        c: &BehaviorCatalog,
    ) -> Result<RawDistribution, GeneratorError> {
        (**self).generate_distribution(e, m, c)
    }

    fn generate_action(&mut self, e: &Event, b: &Behavior, m: &Memory) -> Result<Action, GeneratorError> {
        (**self).generate_action(e, b, m)
    }

    fn sum_tolerance(&self) -> f64 {
        (**self).sum_tolerance()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Watermark {
    pub key: WatermarkKey,
    pub config: GuidanceConfig,
}

/// Runs `rounds` rounds for one agent. Selection draws exactly one uniform per
/// round from a sampler seeded with `sampler_seed`.
///
/// A generator failure aborts the whole trace; the error carries the number of
/// rounds completed before it.
pub fn simulate_agent<G: Generator>(
    persona: &Persona,
    rounds: u64,
    catalog: &BehaviorCatalog,
    mut generator: G,
    watermark: Option<&Watermark>,
    sampler_seed: u64,
) -> Result<Trace> {
    if rounds == 0 {
        return Err(Error::NoRounds);
    }
    if let Some(wm) = watermark {
        wm.config.validate(catalog.len())?;
    }
    let mut sampler = SamplerState::new(sampler_seed);
    let mut memory = Memory::new();
    let mut records = Vec::with_capacity(rounds as usize);

    for round in 1..=rounds {
        let fail = |source: GeneratorError| Error::Generator {
            round,
            completed: (round - 1) as usize,
            source,
        };
        let event = generator
            .generate_event(persona, round, &memory)
            .map_err(fail)?;
        let raw = generator
            .generate_distribution(&event, &memory, catalog)
            .map_err(fail)?;
        let dist = normalize_distribution(&raw, catalog, generator.sum_tolerance())
            .map_err(|e| fail(e.into()))?;

        let (selected, biased, guided) = match watermark {
            Some(wm) => {
                let out = embed_round(&dist, catalog, wm.key, round, &wm.config, &mut sampler)?;
                (
                    out.selected,
                    Some(out.biased_distribution.into_vec()),
                    Some(out.guided_subset.indices().to_vec()),
                )
            }
            None => (sample_behavior(&dist, catalog, &mut sampler)?.clone(), None, None),
        };

        let action = generator
            .generate_action(&event, &selected, &memory)
            .map_err(fail)?;
        if action.behavior_id != selected.id() {
            return Err(Error::ActionMismatch {
                selected: selected.id().to_string(),
                action: action.behavior_id,
            });
        }

        records.push(TraceRecord {
            round,
            event_text: event.text.clone(),
            raw_distribution: dist.into_vec(),
            biased_distribution: biased,
            guided_indices: guided,
            selected: selected.id().to_string(),
            action_text: action.text.clone(),
        });
        memory.append(MemoryRecord {
            round,
            event,
            behavior: selected,
            action,
        })?;
    }

    Ok(Trace {
        header: TraceHeader {
            agent: persona.clone(),
            catalog: catalog.clone(),
            watermarked: watermark.is_some(),
            key: watermark.map(|w| w.key),
            sampler_seed,
        },
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mock::{MockGenerator, ProfileTable};
    use crate::persona::{Activity, Mood};

    fn mock(seed: u64) -> MockGenerator {
        MockGenerator::new(
            Persona::builtin(Activity::Active, Mood::Calm),
            ProfileTable::default(),
            seed,
        )
        .unwrap()
    }

    struct Failing {
        inner: MockGenerator,
        fail_at: u64,
    }

    impl Generator for Failing {
        fn generate_event(&mut self, p: &Persona, r: u64, m: &Memory) -> Result<Event, GeneratorError> {
            if r == self.fail_at {
                return Err(GeneratorError::EndpointUnreachable("down".into()));
            }
            self.inner.generate_event(p, r, m)
        }
        fn generate_distribution(&mut self, e: &Event, m: &Memory, c: &BehaviorCatalog) -> Result<RawDistribution, GeneratorError> {
            self.inner.generate_distribution(e, m, c)
        }
        fn generate_action(&mut self, e: &Event, b: &Behavior, m: &Memory) -> Result<Action, GeneratorError> {
            self.inner.generate_action(e, b, m)
        }
    }

    struct WrongAction(MockGenerator);

    impl Generator for WrongAction {
        fn generate_event(&mut self, p: &Persona, r: u64, m: &Memory) -> Result<Event, GeneratorError> {
            self.0.generate_event(p, r, m)
        }
        fn generate_distribution(&mut self, e: &Event, m: &Memory, c: &BehaviorCatalog) -> Result<RawDistribution, GeneratorError> {
            self.0.generate_distribution(e, m, c)
        }
        fn generate_action(&mut self, _: &Event, _: &Behavior, _: &Memory) -> Result<Action, GeneratorError> {
            Ok(Action { behavior_id: "nope".into(), text: "x".into() })
        }
    }

    #[test]
    fn fifty_watermarked_rounds() {
        let cat = BehaviorCatalog::social_media();
        let persona = Persona::builtin(Activity::Active, Mood::Calm);
        let wm = Watermark {
            key: WatermarkKey(2025),
            config: GuidanceConfig::default(),
        };
        let t = simulate_agent(&persona, 50, &cat, mock(1), Some(&wm), 7).unwrap();
        assert_eq!(t.len(), 50);
        t.validate().unwrap();
        assert!(t.records.iter().all(|r| r.guided_indices.is_some()));
        assert_eq!(t.header.key, Some(WatermarkKey(2025)));
    }

    #[test]
    fn single_unwatermarked_round() {
        let cat = BehaviorCatalog::social_media();
        let persona = Persona::builtin(Activity::Active, Mood::Calm);
        let t = simulate_agent(&persona, 1, &cat, mock(1), None, 7).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.records[0].biased_distribution.is_none());
        assert!(!t.header.watermarked);
        assert!(simulate_agent(&persona, 0, &cat, mock(1), None, 7).is_err());
    }

    #[test]
    fn replay_is_deterministic() {
        let cat = BehaviorCatalog::social_media();
        let persona = Persona::builtin(Activity::Active, Mood::Calm);
        let wm = Watermark {
            key: WatermarkKey(2025),
            config: GuidanceConfig::default(),
        };
        let a = simulate_agent(&persona, 30, &cat, mock(3), Some(&wm), 9).unwrap();
        let b = simulate_agent(&persona, 30, &cat, mock(3), Some(&wm), 9).unwrap();
        assert_eq!(a, b);
        let c = simulate_agent(&persona, 30, &cat, mock(3), Some(&wm), 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generator_failure_reports_progress() {
        let cat = BehaviorCatalog::social_media();
        let persona = Persona::builtin(Activity::Active, Mood::Calm);
        let g = Failing {
            inner: mock(1),
            fail_at: 5,
        };
        match simulate_agent(&persona, 10, &cat, g, None, 1) {
            Err(Error::Generator { round, completed, .. }) => {
                assert_eq!(round, 5);
                assert_eq!(completed, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn action_must_match_selection() {
        let cat = BehaviorCatalog::social_media();
        let persona = Persona::builtin(Activity::Active, Mood::Calm);
        assert!(matches!(
            simulate_agent(&persona, 3, &cat, WrongAction(mock(1)), None, 1),
            Err(Error::ActionMismatch { .. })
        ));
    }

    #[test]
    fn logged_subsets_contain_bias() {
        let cat = BehaviorCatalog::social_media();
        let persona = Persona::builtin(Activity::Inactive, Mood::Sad);
        let wm = Watermark {
            key: WatermarkKey(11),
            config: GuidanceConfig::default(),
        };
        let g = MockGenerator::new(persona.clone(), ProfileTable::default(), 2).unwrap();
        let t = simulate_agent(&persona, 20, &cat, g, Some(&wm), 3).unwrap();
        for r in &t.records {
            let biased = r.biased_distribution.as_ref().unwrap();
            let guided = r.guided_indices.as_ref().unwrap();
            for (i, (b, p)) in biased.iter().zip(&r.raw_distribution).enumerate() {
                if guided.contains(&i) {
                    assert!(b >= p);
                } else {
                    assert!(b <= p);
                }
            }
        }
    }
}
