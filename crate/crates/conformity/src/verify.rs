//! Exhaustive cross-validation: the closed-form classifier against
//! brute-force chain analysis, and the sure-transition condition tables
//! against brute-force transition structure.
//!
//! The brute-force side uses only the transition tables and band logic,
//! never the classifier's conditions, so the two code paths share nothing
//! beyond the core model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{absorbing_classes, PossibilityDigraph};
use crate::classify::{self, CanonicalId, Prediction};
use crate::model::{validate, InfluenceabilityParams, SocietyComposition};
use crate::transitions::{
    chain2_condition, enumerate_interval, is_possible, reversal, sure_transition_condition, Chain2,
    CollectionTag, CHAIN2_IDS, COLLECTION_TAGS,
};

/// Which family of compositions a sweep enumerates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// All `n_c` in `1..n`, no mixed agents.
    Pure,
    /// All `(n_c, n_a, n_m)` with every group nonempty.
    Mixed,
    /// The three single-group compositions.
    Degenerate,
}

/// Optional deterministic subsampling of the scenario enumeration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SampleSpec {
    pub seed: u64,
    pub rate: f64,
}

/// A sweep over compositions and all valid threshold tuples.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSpec {
    pub n_min: u32,
    pub n_max: u32,
    pub mode: SweepMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleSpec>,
    /// Scenarios whose classifier mismatches are tolerated (expected empty).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub allow_list: Vec<ScenarioKey>,
}

impl SweepSpec {
    pub fn exhaustive(mode: SweepMode, n_min: u32, n_max: u32) -> Self {
        Self {
            n_min,
            n_max,
            mode,
            sample: None,
            allow_list: Vec::new(),
        }
    }
}

/// Identifying tuple of one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScenarioKey {
    pub n: u32,
    pub n_c: u32,
    pub n_a: u32,
    pub n_m: u32,
    pub l_c: u32,
    pub r_c: u32,
    pub l_a: u32,
    pub r_a: u32,
}

impl ScenarioKey {
    fn new(comp: &SocietyComposition, z: &InfluenceabilityParams) -> Self {
        Self {
            n: comp.n,
            n_c: comp.n_c,
            n_a: comp.n_a,
            n_m: comp.n_m,
            l_c: z.l_c,
            r_c: z.r_c,
            l_a: z.l_a,
            r_a: z.r_a,
        }
    }

    pub fn composition(&self) -> SocietyComposition {
        SocietyComposition {
            n: self.n,
            n_c: self.n_c,
            n_a: self.n_a,
            n_m: self.n_m,
        }
    }

    pub fn params(&self) -> InfluenceabilityParams {
        InfluenceabilityParams::new(self.l_c, self.r_c, self.l_a, self.r_a)
    }
}

/// Enumerate threshold tuples with both group sums below `n`, in
/// lexicographic order.
fn threshold_tuples(n: u32) -> Vec<InfluenceabilityParams> {
    let mut out = Vec::new();
    for l_c in 0..n {
        for r_c in 0..n - l_c {
            for l_a in 0..n {
                for r_a in 0..n - l_a {
                    out.push(InfluenceabilityParams::new(l_c, r_c, l_a, r_a));
                }
            }
        }
    }
    out
}

fn compositions(mode: SweepMode, n: u32) -> Vec<SocietyComposition> {
    match mode {
        SweepMode::Pure => (1..n)
            .map(|n_c| SocietyComposition::new(n_c, n - n_c, 0).expect("n >= 2"))
            .collect(),
        SweepMode::Mixed => {
            let mut out = Vec::new();
            for n_c in 1..n {
                for n_a in 1..n - n_c {
                    let n_m = n - n_c - n_a;
                    if n_m >= 1 {
                        out.push(SocietyComposition::new(n_c, n_a, n_m).expect("n >= 3"));
                    }
                }
            }
            out
        }
        SweepMode::Degenerate => {
            let mut out = Vec::new();
            for (n_c, n_a, n_m) in [(n, 0, 0), (0, n, 0), (0, 0, n)] {
                out.push(SocietyComposition::new(n_c, n_a, n_m).expect("n >= 1"));
            }
            out
        }
    }
}

/// All scenarios of the sweep in deterministic order, after sampling.
pub fn scenarios(spec: &SweepSpec) -> Vec<ScenarioKey> {
    let mut keys = Vec::new();
    for n in spec.n_min..=spec.n_max {
        for comp in compositions(spec.mode, n) {
            for z in threshold_tuples(n) {
                if validate(&comp, &z).is_ok() {
                    keys.push(ScenarioKey::new(&comp, &z));
                }
            }
        }
    }
    if let Some(sample) = spec.sample {
        let mut rng = ChaCha12Rng::seed_from_u64(sample.seed);
        keys.retain(|_| rng.random::<f64>() < sample.rate);
    }
    keys
}

/// Compact class description used in mismatch reports.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ClassSummary {
    pub states: Vec<u64>,
    pub period: u32,
}

/// One scenario where prediction and brute force disagree.
#[derive(Debug, Clone, Serialize)]
pub struct Mismatch {
    pub scenario: ScenarioKey,
    pub predicted_ids: Vec<CanonicalId>,
    pub predicted: Vec<ClassSummary>,
    pub actual: Vec<ClassSummary>,
    /// Predicted classes absent from the chain.
    pub missing: Vec<ClassSummary>,
    /// Chain classes absent from the prediction.
    pub unexpected: Vec<ClassSummary>,
    pub allowed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifierReport {
    pub spec: SweepSpec,
    pub checked: u64,
    pub mismatches: Vec<Mismatch>,
    /// Mismatches outside the allow list.
    pub failures: u64,
}

fn summarize_prediction(prediction: &Prediction, comp: &SocietyComposition) -> Vec<ClassSummary> {
    classify::materialize(prediction, comp)
        .into_iter()
        .map(|c| ClassSummary {
            states: c.states,
            period: c.period,
        })
        .collect()
}

fn compare_scenario(key: &ScenarioKey, prediction: &Prediction, allowed: bool) -> Option<Mismatch> {
    let comp = key.composition();
    let z = key.params();
    let g = PossibilityDigraph::build(&comp, &z).expect("sweep stays under the cap");
    let mut actual: Vec<ClassSummary> = absorbing_classes(&g)
        .into_iter()
        .map(|c| ClassSummary {
            states: c.states,
            period: c.period,
        })
        .collect();
    actual.sort();
    let mut predicted = summarize_prediction(prediction, &comp);
    predicted.sort();
    if predicted == actual {
        return None;
    }
    let missing = predicted
        .iter()
        .filter(|c| !actual.contains(c))
        .cloned()
        .collect();
    let unexpected = actual
        .iter()
        .filter(|c| !predicted.contains(c))
        .cloned()
        .collect();
    Some(Mismatch {
        scenario: *key,
        predicted_ids: prediction.fired.clone(),
        predicted,
        actual,
        missing,
        unexpected,
        allowed,
    })
}

/// Compare the classifier against brute-force chain analysis over a sweep.
pub fn verify_classifier(spec: &SweepSpec) -> ClassifierReport {
    let keys = scenarios(spec);
    let mismatches: Vec<Mismatch> = keys
        .par_iter()
        .filter_map(|key| {
            let comp = key.composition();
            let z = key.params();
            let prediction = match spec.mode {
                SweepMode::Pure => classify::predict_pure(&comp, &z),
                SweepMode::Mixed => classify::predict_mixed(&comp, &z),
                SweepMode::Degenerate => classify::predict_degenerate(&comp, &z),
            }
            .expect("sweep only generates supported compositions");
            let allowed = spec.allow_list.contains(key);
            compare_scenario(key, &prediction, allowed)
        })
        .collect();
    let failures = mismatches.iter().filter(|m| !m.allowed).count() as u64;
    ClassifierReport {
        spec: spec.clone(),
        checked: keys.len() as u64,
        mismatches,
        failures,
    }
}

/// Brute-force sure-transition test between two collections: every state of
/// `a` must send all its arcs into `b`, and every state of `b` must be
/// reachable in one step from somewhere in `a`.
pub fn brute_sure_transition(g: &PossibilityDigraph, a: CollectionTag, b: CollectionTag) -> bool {
    let comp = g.composition();
    let (a_lo, a_hi) = a.collection().bounds(comp).expect("tags are intervals");
    let (b_lo, b_hi) = b.collection().bounds(comp).expect("tags are intervals");
    for s in a_lo.count_ones()..=a_hi.count_ones() {
        let (lo, hi) = g.successor_interval(s);
        if b_lo & !lo != 0 || hi & !b_hi != 0 {
            return false;
        }
    }
    for target in enumerate_interval(b_lo, b_hi) {
        let covered = (a_lo.count_ones()..=a_hi.count_ones()).any(|s| {
            let (lo, hi) = g.successor_interval(s);
            lo & !target == 0 && target & !hi == 0
        });
        if !covered {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, Serialize)]
pub struct CellDisagreement {
    pub scenario: ScenarioKey,
    pub source: CollectionTag,
    pub target: CollectionTag,
    pub condition: bool,
    pub brute_force: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainDisagreement {
    pub scenario: ScenarioKey,
    pub chain: Chain2,
    pub condition: bool,
    pub brute_force: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TablesReport {
    pub spec: SweepSpec,
    pub checked_cells: u64,
    pub checked_chains: u64,
    pub cell_disagreements: Vec<CellDisagreement>,
    pub chain_disagreements: Vec<ChainDisagreement>,
    pub failures: u64,
}

/// Check every condition cell and every length-2 chain row against brute
/// force over the sweep (societies without mixed agents).
pub fn verify_tables(spec: &SweepSpec) -> TablesReport {
    assert_eq!(
        spec.mode,
        SweepMode::Pure,
        "condition tables cover the pure case"
    );
    let keys = scenarios(spec);
    let per_scenario: Vec<(Vec<CellDisagreement>, Vec<ChainDisagreement>)> = keys
        .par_iter()
        .map(|key| {
            let comp = key.composition();
            let z = key.params();
            let g = PossibilityDigraph::build(&comp, &z).expect("sweep stays under the cap");
            let mut cells = Vec::new();
            let mut brute_cell = [[false; 8]; 8];
            for (i, &a) in COLLECTION_TAGS.iter().enumerate() {
                for (j, &b) in COLLECTION_TAGS.iter().enumerate() {
                    let brute = brute_sure_transition(&g, a, b);
                    brute_cell[i][j] = brute;
                    let condition = sure_transition_condition(a, b, &comp, &z);
                    if condition != brute {
                        cells.push(CellDisagreement {
                            scenario: *key,
                            source: a,
                            target: b,
                            condition,
                            brute_force: brute,
                        });
                    }
                }
            }
            let tag_index = |t: CollectionTag| {
                COLLECTION_TAGS
                    .iter()
                    .position(|&x| x == t)
                    .expect("tag is listed")
            };
            let mut chains = Vec::new();
            for id in CHAIN2_IDS {
                let (sources, mid, target) = id.legs();
                let brute = sources
                    .iter()
                    .all(|&src| brute_cell[tag_index(src)][tag_index(mid)])
                    && brute_cell[tag_index(mid)][tag_index(target)];
                let condition = chain2_condition(id, &comp, &z);
                if condition != brute {
                    chains.push(ChainDisagreement {
                        scenario: *key,
                        chain: id,
                        condition,
                        brute_force: brute,
                    });
                }
            }
            (cells, chains)
        })
        .collect();
    let mut cell_disagreements = Vec::new();
    let mut chain_disagreements = Vec::new();
    for (cells, chains) in per_scenario {
        cell_disagreements.extend(cells);
        chain_disagreements.extend(chains);
    }
    let failures = (cell_disagreements.len() + chain_disagreements.len()) as u64;
    TablesReport {
        spec: spec.clone(),
        checked_cells: keys.len() as u64 * 64,
        checked_chains: keys.len() as u64 * CHAIN2_IDS.len() as u64,
        cell_disagreements,
        chain_disagreements,
        failures,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryViolation {
    pub scenario: ScenarioKey,
    pub source: u64,
    pub target: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryReport {
    pub spec: SweepSpec,
    /// Pairs checked per scenario, or the full count when exhaustive.
    pub checked_pairs: u64,
    pub violations: Vec<SymmetryViolation>,
    pub failures: u64,
}

/// Check the complement/reversal equivalence of the possibility predicate:
/// exhaustively over all state pairs, or on seeded random pairs when
/// `pairs_per_scenario` is given.
pub fn verify_symmetry(spec: &SweepSpec, pairs_per_scenario: Option<u64>) -> SymmetryReport {
    assert_eq!(
        spec.mode,
        SweepMode::Pure,
        "the symmetry check covers the pure case"
    );
    let keys = scenarios(spec);
    let results: Vec<(u64, Vec<SymmetryViolation>)> = keys
        .par_iter()
        .enumerate()
        .map(|(index, key)| {
            let comp = key.composition();
            let z = key.params();
            let rz = reversal(&z);
            let full = comp.full_mask();
            let mut violations = Vec::new();
            let mut checked = 0u64;
            let mut check = |source: u64, target: u64| {
                let direct = is_possible(source, target, &comp, &z);
                let mirrored = is_possible(full & !source, full & !target, &comp, &rz);
                if direct != mirrored {
                    violations.push(SymmetryViolation {
                        scenario: *key,
                        source,
                        target,
                    });
                }
            };
            match pairs_per_scenario {
                None => {
                    for source in 0..(1u64 << comp.n) {
                        for target in 0..(1u64 << comp.n) {
                            check(source, target);
                            checked += 1;
                        }
                    }
                }
                Some(pairs) => {
                    let mut rng = ChaCha12Rng::seed_from_u64(0x53594d);
                    rng.set_stream(index as u64);
                    for _ in 0..pairs {
                        let source = rng.random::<u64>() & full;
                        let target = rng.random::<u64>() & full;
                        check(source, target);
                        checked += 1;
                    }
                }
            }
            (checked, violations)
        })
        .collect();
    let mut violations = Vec::new();
    let mut checked_pairs = 0;
    for (checked, vs) in results {
        checked_pairs += checked;
        violations.extend(vs);
    }
    let failures = violations.len() as u64;
    SymmetryReport {
        spec: spec.clone(),
        checked_pairs,
        violations,
        failures,
    }
}

/// Combined report for the command-line `verify`.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classifier: Option<ClassifierReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degenerate: Option<ClassifierReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tables: Option<TablesReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<SymmetryReport>,
}

impl VerifyReport {
    pub fn failures(&self) -> u64 {
        self.classifier.as_ref().map_or(0, |r| r.failures)
            + self.degenerate.as_ref().map_or(0, |r| r.failures)
            + self.tables.as_ref().map_or(0, |r| r.failures)
            + self.symmetry.as_ref().map_or(0, |r| r.failures)
    }
}
