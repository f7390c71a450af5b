//! Exact transition semantics: the possibility predicate, transition
//! probabilities, symbolic possible-target tables, threshold symmetries, and
//! the sure-transition condition tables.

use serde::{Deserialize, Serialize};

use crate::model::{
    positivity, AgentKind, AggregationRule, InfluenceabilityParams, PositivityBand,
    SocietyComposition,
};

/// Named state sets that appear as bounds of possible-target collections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkerSet {
    Empty,
    Na,
    Nc,
    Full,
    NaUnionNm,
    NcUnionNm,
}

impl MarkerSet {
    pub fn resolve(self, comp: &SocietyComposition) -> u64 {
        match self {
            MarkerSet::Empty => 0,
            MarkerSet::Na => comp.anti_conformist_mask(),
            MarkerSet::Nc => comp.conformist_mask(),
            MarkerSet::Full => comp.full_mask(),
            MarkerSet::NaUnionNm => comp.anti_conformist_mask() | comp.mixed_mask(),
            MarkerSet::NcUnionNm => comp.conformist_mask() | comp.mixed_mask(),
        }
    }
}

/// A symbolic collection of next states.
///
/// `Interval(a, b)` contains every `T` with `a ⊆ T ⊆ b`; the full power set
/// keeps its own tag because it plays a special default role rather than
/// being just another interval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetCollection {
    Singleton(MarkerSet),
    Interval(MarkerSet, MarkerSet),
    Union(Vec<TargetCollection>),
    PowerSet,
}

impl TargetCollection {
    /// Lower/upper bitmask bounds. `None` for unions (resolve parts instead).
    pub fn bounds(&self, comp: &SocietyComposition) -> Option<(u64, u64)> {
        match self {
            TargetCollection::Singleton(m) => {
                let mask = m.resolve(comp);
                Some((mask, mask))
            }
            TargetCollection::Interval(lo, hi) => Some((lo.resolve(comp), hi.resolve(comp))),
            TargetCollection::PowerSet => Some((0, comp.full_mask())),
            TargetCollection::Union(_) => None,
        }
    }

    pub fn contains(&self, state: u64, comp: &SocietyComposition) -> bool {
        match self {
            TargetCollection::Union(parts) => parts.iter().any(|p| p.contains(state, comp)),
            _ => {
                let (lo, hi) = self.bounds(comp).expect("non-union has bounds");
                lo & !state == 0 && state & !hi == 0
            }
        }
    }

    /// All member states in increasing bitmask order.
    pub fn enumerate(&self, comp: &SocietyComposition) -> Vec<u64> {
        match self {
            TargetCollection::Union(parts) => {
                let mut states: Vec<u64> = parts.iter().flat_map(|p| p.enumerate(comp)).collect();
                states.sort_unstable();
                states.dedup();
                states
            }
            _ => {
                let (lo, hi) = self.bounds(comp).expect("non-union has bounds");
                enumerate_interval(lo, hi)
            }
        }
    }
}

/// Members of `[lo, hi]` in increasing bitmask order.
pub fn enumerate_interval(lo: u64, hi: u64) -> Vec<u64> {
    debug_assert_eq!(lo & !hi, 0, "interval bounds must nest");
    let free = hi & !lo;
    let mut out = Vec::with_capacity(1 << free.count_ones());
    let mut sub: u64 = 0;
    loop {
        out.push(lo | sub);
        sub = sub.wrapping_sub(free) & free;
        if sub == 0 {
            break;
        }
    }
    out.sort_unstable();
    out
}

/// The possible-targets table cell for source cardinality `s`.
///
/// Rows are selected by the anti-conformist band of `s`, columns by the
/// conformist band. `mixed_tables` picks the variant that tracks mixed
/// agents explicitly; with `n_m = 0` both variants resolve identically.
pub fn possible_targets(
    s: u32,
    comp: &SocietyComposition,
    z: &InfluenceabilityParams,
    mixed_tables: bool,
) -> TargetCollection {
    use MarkerSet::*;
    use PositivityBand::*;
    let row = positivity(AgentKind::AntiConformist, z, s, comp.n);
    let col = positivity(AgentKind::Conformist, z, s, comp.n);
    if mixed_tables {
        match (row, col) {
            (One, Zero) => TargetCollection::Interval(Na, NaUnionNm),
            (One, Interior) => TargetCollection::Interval(Na, Full),
            (One, One) => TargetCollection::Singleton(Full),
            (Interior, Zero) => TargetCollection::Interval(Empty, NaUnionNm),
            (Interior, Interior) => TargetCollection::PowerSet,
            (Interior, One) => TargetCollection::Interval(Nc, Full),
            (Zero, Zero) => TargetCollection::Singleton(Empty),
            (Zero, Interior) => TargetCollection::Interval(Empty, NcUnionNm),
            (Zero, One) => TargetCollection::Interval(Nc, NcUnionNm),
        }
    } else {
        match (row, col) {
            (One, Zero) => TargetCollection::Singleton(Na),
            (One, Interior) => TargetCollection::Interval(Na, Full),
            (One, One) => TargetCollection::Singleton(Full),
            (Interior, Zero) => TargetCollection::Interval(Empty, Na),
            (Interior, Interior) => TargetCollection::PowerSet,
            (Interior, One) => TargetCollection::Interval(Nc, Full),
            (Zero, Zero) => TargetCollection::Singleton(Empty),
            (Zero, Interior) => TargetCollection::Interval(Empty, Nc),
            (Zero, One) => TargetCollection::Singleton(Nc),
        }
    }
}

/// Whether a one-step transition from `source` to `target` has positive
/// probability.
///
/// Evaluated agent by agent from the positivity bands: every agent inside
/// `target` must be able to say `yes` and every agent outside must be able
/// to say `no`. Independent of interior rule values.
pub fn is_possible(
    source: u64,
    target: u64,
    comp: &SocietyComposition,
    z: &InfluenceabilityParams,
) -> bool {
    let s = (source & comp.full_mask()).count_ones();
    for (kind, size) in comp.groups() {
        if size == 0 {
            continue;
        }
        let mask = comp.group_mask(kind);
        match positivity(kind, z, s, comp.n) {
            PositivityBand::Zero => {
                if target & mask != 0 {
                    return false;
                }
            }
            PositivityBand::One => {
                if mask & !target != 0 {
                    return false;
                }
            }
            PositivityBand::Interior => {}
        }
    }
    true
}

/// `λ(source, target)` for the given per-agent rules; depends on the source
/// only through its cardinality.
pub fn transition_probability(source: u64, target: u64, rules: &[AggregationRule]) -> f64 {
    let n = rules.len() as u32;
    let s = (source & crate::model::low_mask(n)).count_ones();
    let mut prob = 1.0;
    for (i, rule) in rules.iter().enumerate() {
        let p = rule.value(s);
        prob *= if target >> i & 1 == 1 { p } else { 1.0 - p };
    }
    prob
}

/// The reversal `(r_c, l_c, r_a, l_a)`: swaps firing and saturation sides.
pub fn reversal(z: &InfluenceabilityParams) -> InfluenceabilityParams {
    InfluenceabilityParams::new(z.r_c, z.l_c, z.r_a, z.l_a)
}

/// The interchange `(l_a, r_a, l_c, r_c)`: swaps the two behavioural groups.
pub fn interchange(z: &InfluenceabilityParams) -> InfluenceabilityParams {
    InfluenceabilityParams::new(z.l_a, z.r_a, z.l_c, z.r_c)
}

/// The eight collections that can make up absorbing classes in societies
/// without mixed agents, in the row/column order of the sure-transition
/// table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectionTag {
    Empty,
    Na,
    IntervalEmptyNc,
    IntervalEmptyNa,
    IntervalNcFull,
    IntervalNaFull,
    Nc,
    Full,
}

pub const COLLECTION_TAGS: [CollectionTag; 8] = [
    CollectionTag::Empty,
    CollectionTag::Na,
    CollectionTag::IntervalEmptyNc,
    CollectionTag::IntervalEmptyNa,
    CollectionTag::IntervalNcFull,
    CollectionTag::IntervalNaFull,
    CollectionTag::Nc,
    CollectionTag::Full,
];

impl CollectionTag {
    pub fn collection(self) -> TargetCollection {
        use MarkerSet::*;
        match self {
            CollectionTag::Empty => TargetCollection::Singleton(Empty),
            CollectionTag::Na => TargetCollection::Singleton(Na),
            CollectionTag::IntervalEmptyNc => TargetCollection::Interval(Empty, Nc),
            CollectionTag::IntervalEmptyNa => TargetCollection::Interval(Empty, Na),
            CollectionTag::IntervalNcFull => TargetCollection::Interval(Nc, Full),
            CollectionTag::IntervalNaFull => TargetCollection::Interval(Na, Full),
            CollectionTag::Nc => TargetCollection::Singleton(Nc),
            CollectionTag::Full => TargetCollection::Singleton(Full),
        }
    }

    /// The collection of complements, pairing with `reversal` in the
    /// symmetry principle.
    pub fn complement(self) -> CollectionTag {
        match self {
            CollectionTag::Empty => CollectionTag::Full,
            CollectionTag::Na => CollectionTag::Nc,
            CollectionTag::IntervalEmptyNc => CollectionTag::IntervalNaFull,
            CollectionTag::IntervalEmptyNa => CollectionTag::IntervalNcFull,
            CollectionTag::IntervalNcFull => CollectionTag::IntervalEmptyNa,
            CollectionTag::IntervalNaFull => CollectionTag::IntervalEmptyNc,
            CollectionTag::Nc => CollectionTag::Na,
            CollectionTag::Full => CollectionTag::Empty,
        }
    }
}

/// Inclusive integer range, empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct CardRange {
    lo: i64,
    hi: i64,
}

impl CardRange {
    fn contains(&self, s: i64) -> bool {
        self.lo <= s && s <= self.hi
    }

    fn intersects(&self, other: &CardRange) -> bool {
        self.lo.max(other.lo) <= self.hi.min(other.hi)
    }
}

/// Source cardinalities whose one-step successor collection is exactly the
/// tagged collection (the band combination producing that table cell).
fn cell_sources(
    tag: CollectionTag,
    comp: &SocietyComposition,
    z: &InfluenceabilityParams,
) -> CardRange {
    let n = comp.n as i64;
    let (l_c, r_c, l_a, r_a) = (z.l_c as i64, z.r_c as i64, z.l_a as i64, z.r_a as i64);
    let (lo, hi) = match tag {
        CollectionTag::Empty => (n - r_a, l_c),
        CollectionTag::Na => (0, l_a.min(l_c)),
        CollectionTag::IntervalEmptyNc => ((n - r_a).max(l_c + 1), n - r_c - 1),
        CollectionTag::IntervalEmptyNa => (l_a + 1, (n - r_a - 1).min(l_c)),
        CollectionTag::IntervalNcFull => ((l_a + 1).max(n - r_c), n - r_a - 1),
        CollectionTag::IntervalNaFull => (l_c + 1, l_a.min(n - r_c - 1)),
        CollectionTag::Nc => ((n - r_a).max(n - r_c), n),
        CollectionTag::Full => (n - r_c, l_a),
    };
    CardRange {
        lo: lo.max(0),
        hi: hi.min(n),
    }
}

/// Cardinalities of the states of a collection.
fn collection_support(tag: CollectionTag, comp: &SocietyComposition) -> CardRange {
    let n = comp.n as i64;
    let n_c = comp.n_c as i64;
    let n_a = comp.n_a as i64;
    match tag {
        CollectionTag::Empty => CardRange { lo: 0, hi: 0 },
        CollectionTag::Na => CardRange { lo: n_a, hi: n_a },
        CollectionTag::IntervalEmptyNc => CardRange { lo: 0, hi: n_c },
        CollectionTag::IntervalEmptyNa => CardRange { lo: 0, hi: n_a },
        CollectionTag::IntervalNcFull => CardRange { lo: n_c, hi: n },
        CollectionTag::IntervalNaFull => CardRange { lo: n_a, hi: n },
        CollectionTag::Nc => CardRange { lo: n_c, hi: n_c },
        CollectionTag::Full => CardRange { lo: n, hi: n },
    }
}

/// Endpoint singletons and the free group size of a nontrivial interval tag.
fn interval_shape(
    tag: CollectionTag,
    comp: &SocietyComposition,
) -> Option<(CollectionTag, CollectionTag, u32)> {
    match tag {
        CollectionTag::IntervalEmptyNc => Some((CollectionTag::Empty, CollectionTag::Nc, comp.n_c)),
        CollectionTag::IntervalEmptyNa => Some((CollectionTag::Empty, CollectionTag::Na, comp.n_a)),
        CollectionTag::IntervalNcFull => Some((CollectionTag::Nc, CollectionTag::Full, comp.n_a)),
        CollectionTag::IntervalNaFull => Some((CollectionTag::Na, CollectionTag::Full, comp.n_c)),
        _ => None,
    }
}

/// Sure-transition condition between two of the eight collections, for
/// societies without mixed agents: every state of the source sends all its
/// probability mass into the target, and every target state is reachable.
///
/// Evaluated in closed form over source-cardinality ranges. For an interval
/// target the source support must stay within the cardinalities producing
/// the target cell or its endpoint singletons, the full-interval cell must
/// occur whenever the interval has interior states, and each endpoint needs
/// a producing cardinality.
pub fn sure_transition_condition(
    source: CollectionTag,
    target: CollectionTag,
    comp: &SocietyComposition,
    z: &InfluenceabilityParams,
) -> bool {
    let supp = collection_support(source, comp);
    match interval_shape(target, comp) {
        None => {
            let cell = cell_sources(target, comp, z);
            cell.lo <= supp.lo && supp.hi <= cell.hi
        }
        Some((lo_tag, hi_tag, free_size)) => {
            let full = cell_sources(target, comp, z);
            let lo_cell = cell_sources(lo_tag, comp, z);
            let hi_cell = cell_sources(hi_tag, comp, z);
            let closed = (supp.lo..=supp.hi)
                .all(|s| full.contains(s) || lo_cell.contains(s) || hi_cell.contains(s));
            let interior_covered = free_size < 2 || supp.intersects(&full);
            let lo_covered = supp.intersects(&full) || supp.intersects(&lo_cell);
            let hi_covered = supp.intersects(&full) || supp.intersects(&hi_cell);
            closed && interior_covered && lo_covered && hi_covered
        }
    }
}

/// The length-2 chains of sure transitions that can seed periodic classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chain2 {
    NaToEmptyToNa,
    NcToEmptyToNa,
    EmptyToNaToIntervalNcFull,
    EmptyToNaToNc,
    EmptyToNaToFull,
    NcToNaToEmpty,
    IntervalEmptyNcToNaToIntervalEmptyNc,
    NcToNaToNc,
    NcOrIntervalEmptyNcToNaToFull,
    NaToIntervalEmptyNcToNa,
    IntervalNaFullToIntervalEmptyNcToIntervalNaFull,
}

pub const CHAIN2_IDS: [Chain2; 11] = [
    Chain2::NaToEmptyToNa,
    Chain2::NcToEmptyToNa,
    Chain2::EmptyToNaToIntervalNcFull,
    Chain2::EmptyToNaToNc,
    Chain2::EmptyToNaToFull,
    Chain2::NcToNaToEmpty,
    Chain2::IntervalEmptyNcToNaToIntervalEmptyNc,
    Chain2::NcToNaToNc,
    Chain2::NcOrIntervalEmptyNcToNaToFull,
    Chain2::NaToIntervalEmptyNcToNa,
    Chain2::IntervalNaFullToIntervalEmptyNcToIntervalNaFull,
];

impl Chain2 {
    /// The two sure-transition legs, as (source, middle, target). For the
    /// row with two admissible sources the second source is returned too.
    pub fn legs(self) -> (&'static [CollectionTag], CollectionTag, CollectionTag) {
        use CollectionTag::*;
        match self {
            Chain2::NaToEmptyToNa => (&[Na], Empty, Na),
            Chain2::NcToEmptyToNa => (&[Nc], Empty, Na),
            Chain2::EmptyToNaToIntervalNcFull => (&[Empty], Na, IntervalNcFull),
            Chain2::EmptyToNaToNc => (&[Empty], Na, Nc),
            Chain2::EmptyToNaToFull => (&[Empty], Na, Full),
            Chain2::NcToNaToEmpty => (&[Nc], Na, Empty),
            Chain2::IntervalEmptyNcToNaToIntervalEmptyNc => {
                (&[IntervalEmptyNc], Na, IntervalEmptyNc)
            }
            Chain2::NcToNaToNc => (&[Nc], Na, Nc),
            Chain2::NcOrIntervalEmptyNcToNaToFull => (&[Nc, IntervalEmptyNc], Na, Full),
            Chain2::NaToIntervalEmptyNcToNa => (&[Na], IntervalEmptyNc, Na),
            Chain2::IntervalNaFullToIntervalEmptyNcToIntervalNaFull => {
                (&[IntervalNaFull], IntervalEmptyNc, IntervalNaFull)
            }
        }
    }
}

/// Condition for one length-2 chain row: both sure-transition legs hold
/// (and every admissible source works, for the row that lists two).
pub fn chain2_condition(id: Chain2, comp: &SocietyComposition, z: &InfluenceabilityParams) -> bool {
    let (sources, mid, target) = id.legs();
    sources
        .iter()
        .all(|&src| sure_transition_condition(src, mid, comp, z))
        && sure_transition_condition(mid, target, comp, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;

    fn comp(n_c: u32, n_a: u32, n_m: u32) -> SocietyComposition {
        SocietyComposition::new(n_c, n_a, n_m).unwrap()
    }

    fn z(l_c: u32, r_c: u32, l_a: u32, r_a: u32) -> InfluenceabilityParams {
        InfluenceabilityParams::new(l_c, r_c, l_a, r_a)
    }

    /// All threshold tuples valid for the composition.
    fn valid_zs(n: u32) -> Vec<InfluenceabilityParams> {
        let mut out = Vec::new();
        for l_c in 0..n {
            for r_c in 0..n - l_c {
                for l_a in 0..n {
                    for r_a in 0..n - l_a {
                        out.push(z(l_c, r_c, l_a, r_a));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn empty_goes_to_na_and_full_to_nc() {
        let c = comp(3, 2, 0);
        let zz = z(1, 1, 1, 1);
        assert_eq!(
            possible_targets(0, &c, &zz, false),
            TargetCollection::Singleton(MarkerSet::Na)
        );
        assert_eq!(
            possible_targets(5, &c, &zz, false),
            TargetCollection::Singleton(MarkerSet::Nc)
        );
        assert!(is_possible(0, c.anti_conformist_mask(), &c, &zz));
        assert!(!is_possible(0, 0, &c, &zz));
    }

    #[test]
    fn pure_table_row3_col1_is_empty_set() {
        // s at or past the anti saturation point while conformists stay quiet.
        let c = comp(2, 4, 0);
        let zz = z(4, 1, 0, 2);
        // n - r_a = 4, so s = 3 is still interior for anti-conformists but
        // s = 4 is not; l_c = 4 keeps both in the conformist zero column.
        assert_eq!(
            possible_targets(3, &c, &zz, false),
            TargetCollection::Interval(MarkerSet::Empty, MarkerSet::Na)
        );
        assert_eq!(
            possible_targets(4, &c, &zz, false),
            TargetCollection::Singleton(MarkerSet::Empty)
        );
    }

    #[test]
    fn mixed_table_bottom_right_cell() {
        let c = comp(2, 2, 2);
        let zz = z(1, 1, 1, 1);
        // s = 6 is past both saturation points.
        assert_eq!(
            possible_targets(6, &c, &zz, true),
            TargetCollection::Interval(MarkerSet::Nc, MarkerSet::NcUnionNm)
        );
        assert_eq!(
            possible_targets(0, &c, &zz, true),
            TargetCollection::Interval(MarkerSet::Na, MarkerSet::NaUnionNm)
        );
    }

    #[test]
    fn mixed_table_reduces_to_pure_table_without_mixed_agents() {
        for n_c in 0..=4u32 {
            for n_a in 0..=(4 - n_c) {
                if n_c + n_a == 0 {
                    continue;
                }
                let c = comp(n_c, n_a, 0);
                for zz in valid_zs(c.n) {
                    for s in 0..=c.n {
                        let pure = possible_targets(s, &c, &zz, false).enumerate(&c);
                        let mixed = possible_targets(s, &c, &zz, true).enumerate(&c);
                        assert_eq!(pure, mixed);
                    }
                }
            }
        }
    }

    #[test]
    fn all_zero_thresholds_make_every_target_possible_between_consensus() {
        let c = comp(2, 1, 0);
        let zz = z(0, 0, 0, 0);
        for source in 1..7u64 {
            for target in 0..8u64 {
                assert!(is_possible(source, target, &c, &zz));
            }
        }
        assert_eq!(
            possible_targets(1, &c, &zz, false),
            TargetCollection::PowerSet
        );
    }

    #[test]
    fn possibility_agrees_with_table_membership_exhaustively() {
        // Independent routes: the per-agent band predicate versus the
        // table cells, over every state pair up to n = 6.
        for n_c in 0..=6u32 {
            for n_a in 0..=(6 - n_c) {
                for n_m in 0..=(6 - n_c - n_a) {
                    if n_c + n_a + n_m == 0 {
                        continue;
                    }
                    let c = comp(n_c, n_a, n_m);
                    if c.n > 6 {
                        continue;
                    }
                    for zz in valid_zs(c.n) {
                        if validate(&c, &zz).is_err() {
                            continue;
                        }
                        for source in 0..(1u64 << c.n) {
                            let cell = possible_targets(source.count_ones(), &c, &zz, !c.is_pure());
                            for target in 0..(1u64 << c.n) {
                                assert_eq!(
                                    is_possible(source, target, &c, &zz),
                                    cell.contains(target, &c),
                                    "n_c={n_c} n_a={n_a} n_m={n_m} z={zz:?} S={source:b} T={target:b}"
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn consensus_sources_transition_surely() {
        let c = comp(2, 2, 0);
        let zz = z(1, 1, 1, 1);
        let rules: Vec<AggregationRule> = (0..4)
            .map(|i| AggregationRule::ramp(c.kind_of(i), &zz, 4, None).unwrap())
            .collect();
        let na = c.anti_conformist_mask();
        let nc = c.conformist_mask();
        assert_eq!(transition_probability(0, na, &rules), 1.0);
        assert_eq!(transition_probability(c.full_mask(), nc, &rules), 1.0);
        for target in 0..(1u64 << 4) {
            if target != na {
                assert_eq!(transition_probability(0, target, &rules), 0.0);
            }
        }
    }

    #[test]
    fn transition_probability_quarter_example() {
        // One conformist and one anti-conformist, both with probability 1/2
        // at s = 1: every target from a one-agent state has probability 1/4.
        let c = comp(1, 1, 0);
        let zz = z(0, 0, 0, 0);
        let rules = vec![
            AggregationRule::ramp(AgentKind::Conformist, &zz, 2, None).unwrap(),
            AggregationRule::ramp(AgentKind::AntiConformist, &zz, 2, None).unwrap(),
        ];
        let source = 0b01; // the conformist
        let mut total = 0.0;
        for target in 0..4u64 {
            let p = transition_probability(source, target, &rules);
            assert!((p - 0.25).abs() < 1e-15);
            total += p;
        }
        assert!((total - 1.0).abs() < 1e-12);
        let _ = c;
    }

    #[test]
    fn sure_transitions_from_consensus() {
        let c = comp(2, 2, 0);
        for zz in valid_zs(4) {
            assert!(sure_transition_condition(
                CollectionTag::Empty,
                CollectionTag::Na,
                &c,
                &zz
            ));
            assert!(sure_transition_condition(
                CollectionTag::Full,
                CollectionTag::Nc,
                &c,
                &zz
            ));
            assert!(!sure_transition_condition(
                CollectionTag::Empty,
                CollectionTag::Nc,
                &c,
                &zz
            ));
        }
    }

    #[test]
    fn sure_transition_na_to_empty_example() {
        let c = comp(9, 1, 0);
        let zz = z(2, 1, 0, 9);
        // n - l_c = 8 <= n_c = 9 <= r_a = 9.
        assert!(sure_transition_condition(
            CollectionTag::Na,
            CollectionTag::Empty,
            &c,
            &zz
        ));
    }

    #[test]
    fn reversal_and_interchange_are_involutions() {
        let zz = z(2, 3, 1, 4);
        assert_eq!(reversal(&zz), z(3, 2, 4, 1));
        assert_eq!(interchange(&zz), z(1, 4, 2, 3));
        assert_eq!(reversal(&reversal(&zz)), zz);
        assert_eq!(interchange(&interchange(&zz)), zz);
        let self_dual = z(2, 2, 3, 3);
        assert_eq!(reversal(&self_dual), self_dual);
    }

    #[test]
    fn symmetry_principle_small_exhaustive() {
        for n_c in 1..=4u32 {
            for n_a in 1..=(5 - n_c) {
                let c = comp(n_c, n_a, 0);
                for zz in valid_zs(c.n) {
                    let rz = reversal(&zz);
                    let full = c.full_mask();
                    for source in 0..(1u64 << c.n) {
                        for target in 0..(1u64 << c.n) {
                            assert_eq!(
                                is_possible(source, target, &c, &zz),
                                is_possible(full & !source, full & !target, &c, &rz)
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn singleton_target_cells_reduce_to_the_inequality_formulas() {
        // Cells whose target is a single marker state admit one exact
        // inequality on n_c; spot-check those formulas across a sweep.
        for n_c in 1..=5i64 {
            for n_a in 1..=(6 - n_c) {
                let c = comp(n_c as u32, n_a as u32, 0);
                let n = n_c + n_a;
                for zz in valid_zs(c.n) {
                    let (l_c, r_c, l_a, r_a) =
                        (zz.l_c as i64, zz.r_c as i64, zz.l_a as i64, zz.r_a as i64);
                    assert_eq!(
                        sure_transition_condition(CollectionTag::Na, CollectionTag::Empty, &c, &zz),
                        n - l_c <= n_c && n_c <= r_a
                    );
                    assert_eq!(
                        sure_transition_condition(CollectionTag::Na, CollectionTag::Nc, &c, &zz),
                        n_c <= r_c.min(r_a)
                    );
                    assert_eq!(
                        sure_transition_condition(CollectionTag::Nc, CollectionTag::Full, &c, &zz),
                        n - r_c <= n_c && n_c <= l_a
                    );
                    assert_eq!(
                        sure_transition_condition(
                            CollectionTag::IntervalEmptyNc,
                            CollectionTag::Na,
                            &c,
                            &zz
                        ),
                        n_c <= l_c.min(l_a)
                    );
                }
            }
        }
    }

    #[test]
    fn chain2_singleton_rows_match_their_formulas() {
        for n_c in 1..=5i64 {
            for n_a in 1..=(6 - n_c) {
                let c = comp(n_c as u32, n_a as u32, 0);
                let n = n_c + n_a;
                for zz in valid_zs(c.n) {
                    let (l_c, r_c, l_a, r_a) =
                        (zz.l_c as i64, zz.r_c as i64, zz.l_a as i64, zz.r_a as i64);
                    assert_eq!(
                        chain2_condition(Chain2::NaToEmptyToNa, &c, &zz),
                        n - l_c <= n_c && n_c <= r_a
                    );
                    assert_eq!(
                        chain2_condition(Chain2::NcToEmptyToNa, &c, &zz),
                        n - r_a <= n_c && n_c <= l_c
                    );
                    assert_eq!(
                        chain2_condition(Chain2::NcToNaToNc, &c, &zz),
                        n_c <= l_c.min(l_a).min(r_c).min(r_a)
                    );
                    assert_eq!(
                        chain2_condition(Chain2::EmptyToNaToFull, &c, &zz),
                        n - l_a <= n_c && n_c <= r_c
                    );
                    assert_eq!(
                        chain2_condition(Chain2::NcToNaToEmpty, &c, &zz),
                        n - l_c <= n_c && n_c <= l_c.min(l_a).min(r_a)
                    );
                }
            }
        }
    }

    #[test]
    fn sure_transition_table_is_centrally_symmetric() {
        for n_c in 1..=5u32 {
            for n_a in 1..=(6 - n_c) {
                let c = comp(n_c, n_a, 0);
                for zz in valid_zs(c.n) {
                    let rz = reversal(&zz);
                    for &a in &COLLECTION_TAGS {
                        for &b in &COLLECTION_TAGS {
                            assert_eq!(
                                sure_transition_condition(a, b, &c, &zz),
                                sure_transition_condition(a.complement(), b.complement(), &c, &rz),
                                "cell ({a:?}, {b:?}) at {c:?} {zz:?}"
                            );
                        }
                    }
                }
            }
        }
    }
}
