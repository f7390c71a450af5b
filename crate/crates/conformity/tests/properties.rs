//! Property tests over randomly drawn compositions, thresholds, and states.

use proptest::prelude::*;

use conformity::model::{
    owa_from_rule, rule_from_owa, AgentKind, AggregationRule, InfluenceabilityParams, OwaWeights,
    SocietyComposition,
};
use conformity::phase::{classify_situation1, classify_situation2};
use conformity::transitions::{is_possible, possible_targets, transition_probability};

/// A composition with n agents split arbitrarily over the three groups.
fn composition(max_n: u32) -> impl Strategy<Value = SocietyComposition> {
    (1..=max_n)
        .prop_flat_map(|n| (Just(n), 0..=n))
        .prop_flat_map(|(n, n_c)| (Just(n), Just(n_c), 0..=(n - n_c)))
        .prop_map(|(n, n_c, n_a)| SocietyComposition::new(n_c, n_a, n - n_c - n_a).unwrap())
}

/// Valid thresholds for any composition: both sums stay below n.
fn thresholds(n: u32) -> impl Strategy<Value = InfluenceabilityParams> {
    (0..n)
        .prop_flat_map(move |l_c| (Just(l_c), 0..n - l_c))
        .prop_flat_map(move |(l_c, r_c)| (Just(l_c), Just(r_c), 0..n))
        .prop_flat_map(move |(l_c, r_c, l_a)| (Just(l_c), Just(r_c), Just(l_a), 0..n - l_a))
        .prop_map(|(l_c, r_c, l_a, r_a)| InfluenceabilityParams::new(l_c, r_c, l_a, r_a))
}

fn scenario(max_n: u32) -> impl Strategy<Value = (SocietyComposition, InfluenceabilityParams)> {
    composition(max_n).prop_flat_map(|comp| (Just(comp), thresholds(comp.n)))
}

fn rules_for(
    comp: &SocietyComposition,
    z: &InfluenceabilityParams,
    alpha: f64,
) -> Vec<AggregationRule> {
    (0..comp.n)
        .map(|i| {
            let kind = comp.kind_of(i);
            let a = (kind == AgentKind::Mixed).then_some(alpha);
            AggregationRule::ramp(kind, z, comp.n, a).unwrap()
        })
        .collect()
}

proptest! {
    /// One-step probabilities over all targets sum to one.
    #[test]
    fn rows_are_stochastic(
        (comp, z) in scenario(8),
        source_bits in any::<u64>(),
        alpha in 0.05f64..0.95,
    ) {
        let source = source_bits & comp.full_mask();
        let rules = rules_for(&comp, &z, alpha);
        let total: f64 = (0..(1u64 << comp.n))
            .map(|target| transition_probability(source, target, &rules))
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-12, "total {total}");
    }

    /// Transition probability depends on the source only through its size.
    #[test]
    fn transitions_are_anonymous(
        (comp, z) in scenario(10),
        bits in any::<(u64, u64, u64)>(),
        alpha in 0.05f64..0.95,
    ) {
        let full = comp.full_mask();
        let (a, b, target) = (bits.0 & full, bits.1 & full, bits.2 & full);
        prop_assume!(a.count_ones() == b.count_ones());
        let rules = rules_for(&comp, &z, alpha);
        prop_assert_eq!(
            transition_probability(a, target, &rules),
            transition_probability(b, target, &rules)
        );
    }

    /// Weight/rule conversion round-trips within 1e-12 per entry.
    #[test]
    fn owa_round_trip(raw in prop::collection::vec(0.0f64..1.0, 1..20)) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 1e-6);
        let normalized: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let weights = OwaWeights::new(normalized).unwrap();
        let back = owa_from_rule(&rule_from_owa(&weights)).unwrap();
        for (a, b) in weights.as_slice().iter().zip(back.as_slice()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    /// The per-agent possibility predicate agrees with membership in the
    /// possible-target table cell, sampled at n = 12.
    #[test]
    fn possibility_matches_table_cells_at_n12(
        split in (0u32..=12).prop_flat_map(|n_c| (Just(n_c), 0..=(12 - n_c))),
        z in thresholds(12),
        pairs in prop::collection::vec(any::<(u64, u64)>(), 50),
    ) {
        let (n_c, n_a) = split;
        let comp = SocietyComposition::new(n_c, n_a, 12 - n_c - n_a).unwrap();
        let full = comp.full_mask();
        for (s_bits, t_bits) in pairs {
            let source = s_bits & full;
            let target = t_bits & full;
            let cell = possible_targets(source.count_ones(), &comp, &z, !comp.is_pure());
            prop_assert_eq!(
                is_possible(source, target, &comp, &z),
                cell.contains(target, &comp),
                "S={:b} T={:b}", source, target
            );
        }
    }

    /// Where the two large-population situations overlap (equal thresholds,
    /// yes/no symmetric), their labels coincide.
    #[test]
    fn situations_agree_on_their_overlap(
        l in 0.01f64..0.49,
        n_a in 0.001f64..0.999,
    ) {
        let gamma = 1.0 / (1.0 - 2.0 * l);
        let one = classify_situation1(n_a, l, gamma);
        let two = classify_situation2(n_a, l, l);
        prop_assert_eq!(one.label.to_string(), two.label.to_string());
    }

    /// Beyond the exhaustively swept sizes: every exact class realizes one
    /// of the twenty canonical shapes, classes are pairwise disjoint, and
    /// the prediction is never empty.
    #[test]
    fn classes_match_canonical_shapes_at_n12(
        split in (1u32..=11).prop_flat_map(|n_c| (Just(n_c), 1..=(12 - n_c))),
        z in thresholds(12),
    ) {
        let (n_c, n_a) = split;
        let comp = SocietyComposition::new(n_c, n_a, 12 - n_c - n_a).unwrap();
        let classes = conformity::classify::exact_classes(&comp, &z).unwrap();
        prop_assert!(!classes.is_empty());
        let mut seen = std::collections::BTreeSet::new();
        for class in &classes {
            prop_assert!(
                !class.ids.is_empty(),
                "class outside the canonical shapes at {:?} {:?}: cards {:?}",
                comp, z, class.class.cards
            );
            for profile in class.class.profiles() {
                prop_assert!(seen.insert(profile), "classes overlap at {:?} {:?}", comp, z);
            }
        }
    }
}
