use std::collections::BTreeMap;

use agent_guide_core::*;
use proptest::prelude::*;

fn weights(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..10.0, m).prop_filter("positive sum", |w| w.iter().sum::<f64>() > 1e-6)
}

fn catalog(m: usize) -> BehaviorCatalog {
    BehaviorCatalog::new((0..m).map(|i| format!("b{i}"))).unwrap()
}

fn as_map(cat: &BehaviorCatalog, w: &[f64]) -> BTreeMap<String, f64> {
    cat.ids().zip(w).map(|(k, v)| (k.to_string(), *v)).collect()
}

proptest! {
    #[test]
    fn normalize_is_scale_invariant(w in weights(5), c in 0.01f64..100.0) {
        let cat = catalog(5);
        let a = normalize_distribution(&as_map(&cat, &w), &cat, f64::INFINITY).unwrap();
        let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
        let b = normalize_distribution(&as_map(&cat, &scaled), &cat, f64::INFINITY).unwrap();
        for (x, y) in a.probs().iter().zip(b.probs()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        prop_assert!((a.probs().iter().sum::<f64>() - 1.0).abs() <= NORMALIZATION_EPSILON);
        // proportions are kept
        for i in 0..5 {
            for j in 0..5 {
                if w[j] > 0.0 && a.probs()[j] > 0.0 {
                    let lhs = a.probs()[i] / a.probs()[j];
                    prop_assert!((lhs - w[i] / w[j]).abs() <= 1e-9 * (1.0 + lhs));
                }
            }
        }
    }

    #[test]
    fn normalize_roundtrip_is_identity(w in weights(6)) {
        let cat = catalog(6);
        let d = BehaviorDistribution::from_weights(&w).unwrap();
        let back = normalize_distribution(&d.to_map(&cat), &cat, 0.05).unwrap();
        for (x, y) in d.probs().iter().zip(back.probs()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn bias_invariants(
        w in weights(6),
        mask in prop::collection::vec(any::<bool>(), 6),
        gamma in 0.0f64..10.0,
    ) {
        let d = BehaviorDistribution::from_weights(&w).unwrap();
        let idx: Vec<usize> = (0..6).filter(|&i| mask[i]).collect();
        let s = GuidedSubset::new(idx.clone(), 6).unwrap();
        let out = apply_bias(&d, &s, gamma).unwrap();
        prop_assert!((out.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-9);

        let guided_mass: f64 = idx.iter().map(|&i| d.probs()[i]).sum();
        let z = 1.0 + gamma * guided_mass;
        for i in 0..6 {
            let p = d.probs()[i];
            let closed = if s.contains(i) { p * (1.0 + gamma) / z } else { p / z };
            prop_assert!((out.probs()[i] - closed).abs() <= 1e-12);
            prop_assert_eq!(p == 0.0, out.probs()[i] == 0.0);
            if gamma > 0.0 && guided_mass > 0.0 && guided_mass < 1.0 {
                if s.contains(i) {
                    prop_assert!(out.probs()[i] >= p);
                } else {
                    prop_assert!(out.probs()[i] <= p);
                }
            }
        }
        let post: f64 = idx.iter().map(|&i| out.probs()[i]).sum();
        let q = (1.0 + gamma) * guided_mass / (1.0 + gamma * guided_mass);
        prop_assert!((post - q).abs() <= 1e-12);
        prop_assert!((expected_hit_rate(&d, &s, gamma) - q).abs() <= 1e-12);
    }

    #[test]
    fn floors_hold_for_any_key(key in any::<u64>(), round in 0u64..1_000_000) {
        let cfg = GuidanceConfig::default();
        let p = derive_params(WatermarkKey(key), round, &cfg, 6).unwrap();
        prop_assert!(p.gamma >= 0.5);
        prop_assert!(p.n >= 3 && p.n <= 5);
        let s = select_guided_subset(&BehaviorCatalog::social_media(), WatermarkKey(key), round, p.n).unwrap();
        prop_assert_eq!(s.len(), p.n);
    }

    #[test]
    fn z_is_increasing_in_hits(n in 1u64..200, p0 in 0.01f64..0.99) {
        let mut prev = f64::NEG_INFINITY;
        for x in 0..=n {
            let z = z_statistic(x, n, p0).unwrap();
            prop_assert!(z > prev);
            prev = z;
        }
    }
}

/// Mean and standard deviation of Binomial(n, p) by direct summation over
/// the pmf, built from exact integer binomial coefficients.
fn binomial_moments(n: u64, p: f64) -> (f64, f64) {
    let mut coeff = 1u128;
    let (mut mean, mut second) = (0.0, 0.0);
    for x in 0..=n {
        if x > 0 {
            coeff = coeff * (n - x + 1) as u128 / x as u128;
        }
        let pmf = coeff as f64 * p.powi(x as i32) * (1.0 - p).powi((n - x) as i32);
        mean += x as f64 * pmf;
        second += (x * x) as f64 * pmf;
    }
    (mean, (second - mean * mean).sqrt())
}

#[test]
fn z_matches_exact_binomial_standardization() {
    for n in 1..=60u64 {
        for p10 in 1..=9 {
            let p0 = p10 as f64 / 10.0;
            let (mu, sigma) = binomial_moments(n, p0);
            for x in 0..=n {
                let z = z_statistic(x, n, p0).unwrap();
                let oracle = (x as f64 - mu) / sigma;
                assert!((z - oracle).abs() < 1e-9, "x={x} n={n} p0={p0}: {z} vs {oracle}");
            }
        }
    }
}

#[test]
fn uniform_six_with_three_guided() {
    let d = BehaviorDistribution::uniform(6).unwrap();
    let s = GuidedSubset::new(vec![0, 2, 5], 6).unwrap();
    let out = apply_bias(&d, &s, 0.5).unwrap();
    for i in 0..6 {
        let expect = if s.contains(i) { 0.25 / 1.25 } else { (1.0 / 6.0) / 1.25 };
        assert!((out.probs()[i] - expect).abs() < 1e-12);
    }
    assert!((out.probs()[0] - 0.2).abs() < 1e-12);
    assert!((out.probs()[1] - 0.1333).abs() < 1e-4);
}

#[test]
fn detector_recomputes_logged_subsets() {
    let catalog = BehaviorCatalog::social_media();
    let key = WatermarkKey(2025);
    for mode in [GuidanceMode::FixedN, GuidanceMode::PerRoundN] {
        let config = GuidanceConfig { mode, ..Default::default() };
        for persona in Persona::all_builtin() {
            let gen = MockGenerator::new(persona.clone(), ProfileTable::default(), 17).unwrap();
            let wm = Watermark { key, config };
            let trace = simulate_agent(&persona, 50, &catalog, gen, Some(&wm), 23).unwrap();
            let det = DetectionConfig { guidance: config, ..Default::default() };
            let logged_hits = trace
                .records
                .iter()
                .filter(|r| {
                    let sel = catalog.index_of(&r.selected).unwrap();
                    r.guided_indices.as_ref().unwrap().contains(&sel)
                })
                .count() as u64;
            for r in &trace.records {
                let n = params_for_round(key, r.round, &config, 6).unwrap().n;
                let s = select_guided_subset(&catalog, key, r.round, n).unwrap();
                assert_eq!(s.indices(), r.guided_indices.as_deref().unwrap());
            }
            assert_eq!(count_guided_hits(&trace, key, &det, &catalog).unwrap().hits, logged_hits);
        }
    }
}

#[test]
fn memory_grows_one_record_per_round() {
    struct Probe {
        inner: MockGenerator,
        seen: Vec<usize>,
    }
    impl Generator for Probe {
        fn generate_event(&mut self, p: &Persona, r: u64, m: &Memory) -> Result<Event, GeneratorError> {
            assert_eq!(m.len() as u64, r - 1);
            for (i, rec) in m.records().iter().enumerate() {
                assert_eq!(rec.round, i as u64 + 1);
                assert_eq!(rec.action.behavior_id, rec.behavior.id());
            }
            self.seen.push(m.len());
            self.inner.generate_event(p, r, m)
        }
        fn generate_distribution(&mut self, e: &Event, m: &Memory, c: &BehaviorCatalog) -> Result<RawDistribution, GeneratorError> {
            self.inner.generate_distribution(e, m, c)
        }
        fn generate_action(&mut self, e: &Event, b: &Behavior, m: &Memory) -> Result<Action, GeneratorError> {
            self.inner.generate_action(e, b, m)
        }
    }
    let persona: Persona = "Active + Sad".parse().unwrap();
    let mut probe = Probe {
        inner: MockGenerator::new(persona.clone(), ProfileTable::default(), 1).unwrap(),
        seen: Vec::new(),
    };
    let trace = simulate_agent(&persona, 25, &BehaviorCatalog::social_media(), &mut probe, None, 2).unwrap();
    assert_eq!(probe.seen, (0..25).collect::<Vec<_>>());
    assert_eq!(trace.len(), 25);
}
