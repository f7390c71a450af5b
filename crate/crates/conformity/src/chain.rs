//! Exact analysis of the full `2^n`-state chain: possibility digraph,
//! absorbing classes via condensation, periods and cyclic blocks, canonical
//! matching, absorption probabilities, and within-class stationary
//! distributions.

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::classify::{canonical_candidates, CanonicalId};
use crate::model::{
    validate, AggregationRule, ConstraintViolation, InfluenceabilityParams, SocietyComposition,
};
use crate::transitions::{possible_targets, transition_probability};

/// Default bound on `n` for explicit state-space analysis.
pub const DEFAULT_EXACT_CAP: u32 = 16;

/// Largest system the dense LU paths accept (2^12 states); larger
/// stationary problems fall back to averaged power iteration.
const DENSE_SOLVE_CAP: usize = 4096;

const STATIONARY_TOL: f64 = 1e-10;
const STATIONARY_MAX_ITERS: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("state space 2^{n} exceeds the exact-analysis cap 2^{cap}")]
    CapExceeded { n: u32, cap: u32 },
    #[error(transparent)]
    Invalid(#[from] ConstraintViolation),
    #[error("linear solve failed: the system is numerically singular")]
    Singular,
    #[error("stationary iteration did not converge within {0} iterations")]
    NoConvergence(u64),
    #[error("expected {expected} per-agent rules, got {got}")]
    RuleCount { expected: usize, got: usize },
    #[error("state {0:#b} is outside the state space")]
    BadState(u64),
}

/// The possibility digraph over all `2^n` states, stored banded: successor
/// collections depend on the source only through its cardinality, so one
/// interval `(lower, upper)` per cardinality describes every arc.
#[derive(Debug, Clone)]
pub struct PossibilityDigraph {
    comp: SocietyComposition,
    z: InfluenceabilityParams,
    bands: Vec<(u64, u64)>,
}

impl PossibilityDigraph {
    pub fn build(
        comp: &SocietyComposition,
        z: &InfluenceabilityParams,
    ) -> Result<Self, AnalysisError> {
        Self::build_with_cap(comp, z, DEFAULT_EXACT_CAP)
    }

    pub fn build_with_cap(
        comp: &SocietyComposition,
        z: &InfluenceabilityParams,
        cap: u32,
    ) -> Result<Self, AnalysisError> {
        validate(comp, z)?;
        if comp.n > cap {
            return Err(AnalysisError::CapExceeded { n: comp.n, cap });
        }
        let bands = (0..=comp.n)
            .map(|s| {
                possible_targets(s, comp, z, !comp.is_pure())
                    .bounds(comp)
                    .expect("table cells are intervals")
            })
            .collect();
        Ok(Self {
            comp: *comp,
            z: *z,
            bands,
        })
    }

    pub fn composition(&self) -> &SocietyComposition {
        &self.comp
    }

    pub fn params(&self) -> &InfluenceabilityParams {
        &self.z
    }

    pub fn n(&self) -> u32 {
        self.comp.n
    }

    pub fn state_count(&self) -> usize {
        1usize << self.comp.n
    }

    /// Successor interval `(lower, upper)` for sources of cardinality `s`.
    pub fn successor_interval(&self, s: u32) -> (u64, u64) {
        self.bands[s as usize]
    }

    /// Successors of a state in increasing bitmask order.
    pub fn successors(&self, state: u64) -> IntervalIter {
        let (lo, hi) = self.bands[state.count_ones() as usize];
        IntervalIter::new(lo, hi)
    }

    pub fn has_arc(&self, source: u64, target: u64) -> bool {
        let (lo, hi) = self.bands[source.count_ones() as usize];
        lo & !target == 0 && target & !hi == 0
    }
}

/// Iterates `lo | sub` over all submasks `sub` of `hi & !lo`.
pub struct IntervalIter {
    fixed: u64,
    free: u64,
    sub: u64,
    done: bool,
}

impl IntervalIter {
    fn new(lo: u64, hi: u64) -> Self {
        Self {
            fixed: lo,
            free: hi & !lo,
            sub: 0,
            done: false,
        }
    }
}

impl Iterator for IntervalIter {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        if self.done {
            return None;
        }
        let state = self.fixed | self.sub;
        self.sub = self.sub.wrapping_sub(self.free) & self.free;
        if self.sub == 0 {
            self.done = true;
        }
        Some(state)
    }
}

/// A closed, strongly connected set of states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AbsorbingClass {
    /// Sorted state bitmasks.
    pub states: Vec<u64>,
    pub period: u32,
    /// Cyclic blocks; arcs go from block `i` to block `i + 1 mod period`.
    /// The block containing the smallest state comes first.
    pub blocks: Vec<Vec<u64>>,
}

/// Full condensation result for one scenario.
#[derive(Debug, Clone)]
pub struct ChainAnalysis {
    pub classes: Vec<AbsorbingClass>,
    /// Per state: index into `classes`, or `None` for transient states.
    class_of: Vec<Option<u32>>,
}

impl ChainAnalysis {
    pub fn class_of(&self, state: u64) -> Option<u32> {
        self.class_of[state as usize]
    }

    pub fn transient_states(&self) -> impl Iterator<Item = u64> + '_ {
        self.class_of
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_none())
            .map(|(s, _)| s as u64)
    }
}

/// Tarjan over the banded digraph; components are emitted sinks-first
/// (every component is emitted after all components it can reach).
fn strongly_connected_components(g: &PossibilityDigraph) -> Vec<Vec<u32>> {
    let count = g.state_count();
    const UNVISITED: u32 = u32::MAX;
    let mut index: Vec<u32> = vec![UNVISITED; count];
    let mut low: Vec<u32> = vec![0; count];
    let mut on_stack: Vec<bool> = vec![false; count];
    let mut stack: Vec<u32> = Vec::new();
    let mut next_index: u32 = 0;
    let mut components: Vec<Vec<u32>> = Vec::new();

    struct Frame {
        state: u32,
        iter: IntervalIter,
        pending_child: Option<u32>,
    }

    let mut frames: Vec<Frame> = Vec::new();
    for root in 0..count as u32 {
        if index[root as usize] != UNVISITED {
            continue;
        }
        frames.push(Frame {
            state: root,
            iter: g.successors(root as u64),
            pending_child: None,
        });
        index[root as usize] = next_index;
        low[root as usize] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root as usize] = true;

        while let Some(frame) = frames.last_mut() {
            let v = frame.state as usize;
            if let Some(child) = frame.pending_child.take() {
                low[v] = low[v].min(low[child as usize]);
            }
            let mut descended = false;
            for w in frame.iter.by_ref() {
                let w = w as u32;
                if index[w as usize] == UNVISITED {
                    frame.pending_child = Some(w);
                    index[w as usize] = next_index;
                    low[w as usize] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w as usize] = true;
                    frames.push(Frame {
                        state: w,
                        iter: g.successors(w as u64),
                        pending_child: None,
                    });
                    descended = true;
                    break;
                } else if on_stack[w as usize] {
                    low[v] = low[v].min(index[w as usize]);
                }
            }
            if descended {
                continue;
            }
            if low[v] == index[v] {
                let mut component = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w as usize] = false;
                    component.push(w);
                    if w as usize == v {
                        break;
                    }
                }
                component.sort_unstable();
                components.push(component);
            }
            frames.pop();
        }
    }
    components
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// BFS period and cyclic blocks of one closed, strongly connected class.
fn period_and_blocks(g: &PossibilityDigraph, states: &[u64]) -> (u32, Vec<Vec<u64>>) {
    let root = states[0];
    let mut depth: Vec<i64> = vec![-1; g.state_count()];
    depth[root as usize] = 0;
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(root);
    while let Some(u) = queue.pop_front() {
        let du = depth[u as usize];
        for w in g.successors(u) {
            if depth[w as usize] < 0 {
                depth[w as usize] = du + 1;
                queue.push_back(w);
            }
        }
    }
    let mut g0: u64 = 0;
    for &u in states {
        let du = depth[u as usize];
        debug_assert!(du >= 0, "class must be strongly connected");
        for w in g.successors(u) {
            let diff = du + 1 - depth[w as usize];
            g0 = gcd(g0, diff.unsigned_abs());
        }
    }
    debug_assert!(g0 >= 1, "a closed class always contains a cycle");
    let period = g0.max(1) as u32;
    let mut blocks: Vec<Vec<u64>> = vec![Vec::new(); period as usize];
    for &u in states {
        blocks[(depth[u as usize] % period as i64) as usize].push(u);
    }
    for block in &mut blocks {
        block.sort_unstable();
    }
    // Root has depth 0, so the block containing the smallest state is first.
    (period, blocks)
}

/// All absorbing classes of the digraph, sorted by smallest member state.
///
/// Also checks the structural invariant that every state can reach at least
/// one absorbing class.
pub fn analyze(g: &PossibilityDigraph) -> ChainAnalysis {
    let components = strongly_connected_components(g);
    let mut component_of: Vec<u32> = vec![0; g.state_count()];
    for (cid, comp_states) in components.iter().enumerate() {
        for &s in comp_states {
            component_of[s as usize] = cid as u32;
        }
    }

    let mut closed: Vec<bool> = Vec::with_capacity(components.len());
    for comp_states in &components {
        let is_closed = comp_states.iter().all(|&s| {
            g.successors(s as u64)
                .all(|t| component_of[t as usize] == component_of[s as usize])
        });
        closed.push(is_closed);
    }

    // Components come out sinks-first, so reachability folds left to right.
    let mut reaches_class: Vec<bool> = vec![false; components.len()];
    for (cid, comp_states) in components.iter().enumerate() {
        if closed[cid] {
            reaches_class[cid] = true;
            continue;
        }
        reaches_class[cid] = comp_states.iter().any(|&s| {
            g.successors(s as u64)
                .any(|t| reaches_class[component_of[t as usize] as usize])
        });
    }
    assert!(
        reaches_class.iter().all(|&r| r),
        "every state must reach an absorbing class"
    );

    let mut classes: Vec<AbsorbingClass> = Vec::new();
    for (cid, comp_states) in components.iter().enumerate() {
        if !closed[cid] {
            continue;
        }
        let states: Vec<u64> = comp_states.iter().map(|&s| s as u64).collect();
        let (period, blocks) = period_and_blocks(g, &states);
        classes.push(AbsorbingClass {
            states,
            period,
            blocks,
        });
    }
    classes.sort_by_key(|c| c.states[0]);

    let mut class_of: Vec<Option<u32>> = vec![None; g.state_count()];
    for (idx, class) in classes.iter().enumerate() {
        for &s in &class.states {
            class_of[s as usize] = Some(idx as u32);
        }
    }
    ChainAnalysis { classes, class_of }
}

/// Absorbing classes only.
pub fn absorbing_classes(g: &PossibilityDigraph) -> Vec<AbsorbingClass> {
    analyze(g).classes
}

/// Result of matching one brute-force class against the canonical forms.
#[derive(Debug, Clone, Serialize)]
pub struct ClassMatch {
    /// Lowest-numbered matching canonical id, if any.
    pub canonical: Option<CanonicalId>,
    /// Every canonical form resolving to the same state set; distinct forms
    /// can coincide at degenerate group sizes.
    pub all_matches: Vec<CanonicalId>,
    /// Whether the class period equals the matched form's structural period
    /// (interval classes can occur with a degenerate period).
    pub period_agrees: bool,
}

/// Match a class against the canonical forms applicable to `comp` by exact
/// state-set comparison, preferring forms whose structural period agrees.
pub fn match_canonical(class: &AbsorbingClass, comp: &SocietyComposition) -> ClassMatch {
    let candidates = canonical_candidates(comp);
    let set_matches: Vec<_> = candidates
        .iter()
        .filter(|cand| cand.states == class.states)
        .collect();
    let with_period: Vec<CanonicalId> = set_matches
        .iter()
        .filter(|cand| cand.period == class.period)
        .flat_map(|cand| cand.sources.clone())
        .collect();
    let mut all_matches = if with_period.is_empty() {
        set_matches
            .iter()
            .flat_map(|cand| cand.sources.clone())
            .collect()
    } else {
        with_period.clone()
    };
    all_matches.sort_unstable();
    ClassMatch {
        canonical: all_matches.first().copied(),
        all_matches,
        period_agrees: !with_period.is_empty(),
    }
}

fn check_rules(g: &PossibilityDigraph, rules: &[AggregationRule]) -> Result<(), AnalysisError> {
    if rules.len() != g.n() as usize {
        return Err(AnalysisError::RuleCount {
            expected: g.n() as usize,
            got: rules.len(),
        });
    }
    Ok(())
}

/// Probability of ending in each absorbing class from `initial`.
///
/// Solves the transient linear system `(I - Q) X = R` with a dense LU
/// factorization; class probabilities appear in the `initial` row.
pub fn absorption_probabilities(
    g: &PossibilityDigraph,
    rules: &[AggregationRule],
    initial: u64,
    analysis: &ChainAnalysis,
) -> Result<Vec<f64>, AnalysisError> {
    check_rules(g, rules)?;
    if initial >= g.state_count() as u64 {
        return Err(AnalysisError::BadState(initial));
    }
    let k = analysis.classes.len();
    if let Some(c) = analysis.class_of(initial) {
        let mut probs = vec![0.0; k];
        probs[c as usize] = 1.0;
        return Ok(probs);
    }

    let transient: Vec<u64> = analysis.transient_states().collect();
    let t = transient.len();
    if t > DENSE_SOLVE_CAP {
        return Err(AnalysisError::CapExceeded { n: g.n(), cap: 12 });
    }
    let mut transient_index: Vec<usize> = vec![usize::MAX; g.state_count()];
    for (i, &s) in transient.iter().enumerate() {
        transient_index[s as usize] = i;
    }

    let mut q = DMatrix::<f64>::zeros(t, t);
    let mut r = DMatrix::<f64>::zeros(t, k);
    for (i, &s) in transient.iter().enumerate() {
        for target in g.successors(s) {
            let p = transition_probability(s, target, rules);
            if p == 0.0 {
                continue;
            }
            match analysis.class_of(target) {
                Some(c) => r[(i, c as usize)] += p,
                None => q[(i, transient_index[target as usize])] += p,
            }
        }
    }

    let a = DMatrix::<f64>::identity(t, t) - q;
    let lu = a.lu();
    let x = lu.solve(&r).ok_or(AnalysisError::Singular)?;
    Ok(x.row(transient_index[initial as usize])
        .iter()
        .copied()
        .collect())
}

fn restricted_matrix(
    g: &PossibilityDigraph,
    rules: &[AggregationRule],
    states: &[u64],
) -> DMatrix<f64> {
    let m = states.len();
    let mut index: std::collections::HashMap<u64, usize> = std::collections::HashMap::new();
    for (i, &s) in states.iter().enumerate() {
        index.insert(s, i);
    }
    let mut p = DMatrix::<f64>::zeros(m, m);
    for (i, &s) in states.iter().enumerate() {
        for target in g.successors(s) {
            let prob = transition_probability(s, target, rules);
            if prob == 0.0 {
                continue;
            }
            let j = *index.get(&target).expect("absorbing class is closed");
            p[(i, j)] += prob;
        }
    }
    p
}

/// Stationary distribution over the class states (period-averaged when the
/// class is periodic). Indexed like `class.states`.
pub fn stationary_within(
    g: &PossibilityDigraph,
    rules: &[AggregationRule],
    class: &AbsorbingClass,
) -> Result<Vec<f64>, AnalysisError> {
    check_rules(g, rules)?;
    let m = class.states.len();
    if m == 1 {
        return Ok(vec![1.0]);
    }
    if m <= DENSE_SOLVE_CAP {
        let p = restricted_matrix(g, rules, &class.states);
        // pi P = pi with sum(pi) = 1: replace one balance equation by the
        // normalization row.
        let mut a = p.transpose() - DMatrix::<f64>::identity(m, m);
        for j in 0..m {
            a[(m - 1, j)] = 1.0;
        }
        let mut b = DMatrix::<f64>::zeros(m, 1);
        b[(m - 1, 0)] = 1.0;
        let lu = a.lu();
        let pi = lu.solve(&b).ok_or(AnalysisError::Singular)?;
        let mut pi: Vec<f64> = pi.column(0).iter().copied().collect();
        for v in pi.iter_mut() {
            if *v < 0.0 && *v > -1e-12 {
                *v = 0.0;
            }
        }
        let total: f64 = pi.iter().sum();
        for v in pi.iter_mut() {
            *v /= total;
        }
        Ok(pi)
    } else {
        stationary_by_iteration(g, rules, class)
    }
}

/// Averaged power iteration for classes too large for a dense solve.
fn stationary_by_iteration(
    g: &PossibilityDigraph,
    rules: &[AggregationRule],
    class: &AbsorbingClass,
) -> Result<Vec<f64>, AnalysisError> {
    let m = class.states.len();
    let mut index: std::collections::HashMap<u64, usize> = std::collections::HashMap::new();
    for (i, &s) in class.states.iter().enumerate() {
        index.insert(s, i);
    }
    let apply = |x: &[f64]| {
        let mut y = vec![0.0; m];
        for (i, &s) in class.states.iter().enumerate() {
            if x[i] == 0.0 {
                continue;
            }
            for target in g.successors(s) {
                let prob = transition_probability(s, target, rules);
                if prob == 0.0 {
                    continue;
                }
                y[index[&target]] += x[i] * prob;
            }
        }
        y
    };

    let k = class.period.max(1) as usize;
    let mut x = vec![1.0 / m as f64; m];
    let mut iters: u64 = 0;
    while iters < STATIONARY_MAX_ITERS {
        // Average one full period of iterates to damp the cyclic component.
        let mut avg = vec![0.0; m];
        let mut cur = x.clone();
        for _ in 0..k {
            cur = apply(&cur);
            for (a, &c) in avg.iter_mut().zip(cur.iter()) {
                *a += c / k as f64;
            }
            iters += 1;
        }
        let residual = apply(&avg)
            .iter()
            .zip(avg.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        x = avg;
        if residual < STATIONARY_TOL {
            let total: f64 = x.iter().sum();
            for v in x.iter_mut() {
                *v /= total;
            }
            return Ok(x);
        }
    }
    Err(AnalysisError::NoConvergence(STATIONARY_MAX_ITERS))
}

/// Scenario-level analysis report with canonical matches, ready for JSON.
#[derive(Debug, Clone, Serialize)]
pub struct ClassReport {
    pub states: Vec<u64>,
    pub period: u32,
    pub blocks: Vec<Vec<u64>>,
    pub canonical: Option<CanonicalId>,
    pub all_matches: Vec<CanonicalId>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AbsorptionReport {
    pub initial: u64,
    /// Probability per class, indexed like `classes`.
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub n: u32,
    pub n_c: u32,
    pub n_a: u32,
    pub n_m: u32,
    pub classes: Vec<ClassReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absorption: Option<AbsorptionReport>,
}

/// Analyze one scenario end to end: classes, canonical matches, and (when an
/// initial state is given) absorption probabilities.
pub fn report(
    g: &PossibilityDigraph,
    rules: &[AggregationRule],
    initial: Option<u64>,
) -> Result<AnalysisReport, AnalysisError> {
    let analysis = analyze(g);
    let comp = g.composition();
    let classes = analysis
        .classes
        .iter()
        .map(|class| {
            let matched = match_canonical(class, comp);
            ClassReport {
                states: class.states.clone(),
                period: class.period,
                blocks: class.blocks.clone(),
                canonical: matched.canonical,
                all_matches: matched.all_matches,
            }
        })
        .collect();
    let absorption = match initial {
        Some(initial) => Some(AbsorptionReport {
            initial,
            probabilities: absorption_probabilities(g, rules, initial, &analysis)?,
        }),
        None => None,
    };
    Ok(AnalysisReport {
        n: comp.n,
        n_c: comp.n_c,
        n_a: comp.n_a,
        n_m: comp.n_m,
        classes,
        absorption,
    })
}
