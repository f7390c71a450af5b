//! Count-level quotient of the chain.
//!
//! Anonymity makes all states with the same per-group yes-counts
//! interchangeable: a one-step successor collection is an interval whose
//! bounds are unions of whole groups, so membership constrains only the
//! per-group counts, and the constraint depends on the source only through
//! its total count. Absorbing-class structure therefore reduces exactly to
//! the total-count level: classes correspond to terminal strongly connected
//! components of the (n+1)-node cardinality digraph, with each cardinality
//! contributing the full successor pattern of count profiles.

use serde::Serialize;

use crate::model::{
    low_mask, positivity, validate, AgentKind, ConstraintViolation, InfluenceabilityParams,
    PositivityBand, SocietyComposition,
};

/// Per-group yes-counts `(k_c, k_a, k_m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CountProfile {
    pub k_c: u32,
    pub k_a: u32,
    pub k_m: u32,
}

impl CountProfile {
    pub fn new(k_c: u32, k_a: u32, k_m: u32) -> Self {
        Self { k_c, k_a, k_m }
    }

    pub fn total(&self) -> u32 {
        self.k_c + self.k_a + self.k_m
    }

    /// Smallest bitmask state realizing this profile under the fixed
    /// `[conformists | anti-conformists | mixed]` layout.
    pub fn min_state(&self, comp: &SocietyComposition) -> u64 {
        low_mask(self.k_c)
            | low_mask(self.k_a) << comp.n_c
            | low_mask(self.k_m) << (comp.n_c + comp.n_a)
    }

    /// All bitmask states realizing this profile (sorted).
    pub fn states(&self, comp: &SocietyComposition) -> Vec<u64> {
        fn group_masks(size: u32, count: u32, shift: u32) -> Vec<u64> {
            let mut out = Vec::new();
            for bits in 0..(1u64 << size) {
                if bits.count_ones() == count {
                    out.push(bits << shift);
                }
            }
            out
        }
        let conf = group_masks(comp.n_c, self.k_c, 0);
        let anti = group_masks(comp.n_a, self.k_a, comp.n_c);
        let mixed = group_masks(comp.n_m, self.k_m, comp.n_c + comp.n_a);
        let mut out = Vec::with_capacity(conf.len() * anti.len() * mixed.len());
        for &c in &conf {
            for &a in &anti {
                for &m in &mixed {
                    out.push(c | a | m);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Successor constraint for sources of one total count: per group either
/// forced empty, forced full, or free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SuccessorPattern {
    pub lo: CountProfile,
    pub hi: CountProfile,
}

impl SuccessorPattern {
    pub fn card_range(&self) -> (u32, u32) {
        (self.lo.total(), self.hi.total())
    }

    pub fn contains(&self, p: CountProfile) -> bool {
        self.lo.k_c <= p.k_c
            && p.k_c <= self.hi.k_c
            && self.lo.k_a <= p.k_a
            && p.k_a <= self.hi.k_a
            && self.lo.k_m <= p.k_m
            && p.k_m <= self.hi.k_m
    }

    pub fn profiles(&self) -> Vec<CountProfile> {
        let mut out = Vec::new();
        for k_c in self.lo.k_c..=self.hi.k_c {
            for k_a in self.lo.k_a..=self.hi.k_a {
                for k_m in self.lo.k_m..=self.hi.k_m {
                    out.push(CountProfile::new(k_c, k_a, k_m));
                }
            }
        }
        out
    }

    /// Interval bounds as bitmasks under the fixed layout; the bounds are
    /// unions of whole groups so this is exact.
    pub fn state_bounds(&self, comp: &SocietyComposition) -> (u64, u64) {
        let part = |count: u32, size: u32, shift: u32, full_when: u32| -> u64 {
            if count == full_when {
                low_mask(size) << shift
            } else {
                0
            }
        };
        let lo = part(self.lo.k_c, comp.n_c, 0, comp.n_c.max(1))
            | part(self.lo.k_a, comp.n_a, comp.n_c, comp.n_a.max(1))
            | part(self.lo.k_m, comp.n_m, comp.n_c + comp.n_a, comp.n_m.max(1));
        let hi = part(self.hi.k_c, comp.n_c, 0, comp.n_c.max(1))
            | part(self.hi.k_a, comp.n_a, comp.n_c, comp.n_a.max(1))
            | part(self.hi.k_m, comp.n_m, comp.n_c + comp.n_a, comp.n_m.max(1));
        (lo, hi)
    }
}

/// Largest n the exact count-level analysis accepts; the cardinality digraph
/// has O(n^2) arcs.
pub const EXACT_CLASSIFY_CAP: u32 = 4096;

/// The cardinality-level view of the chain.
#[derive(Debug, Clone)]
pub struct CountChain {
    comp: SocietyComposition,
    patterns: Vec<SuccessorPattern>,
}

impl CountChain {
    pub fn new(
        comp: &SocietyComposition,
        z: &InfluenceabilityParams,
    ) -> Result<Self, ConstraintViolation> {
        validate(comp, z)?;
        assert!(
            comp.n <= EXACT_CLASSIFY_CAP,
            "n={} exceeds the count-analysis cap",
            comp.n
        );
        let patterns = (0..=comp.n)
            .map(|s| {
                let bounds = |kind: AgentKind| -> (u32, u32) {
                    let size = comp.group_size(kind);
                    if size == 0 {
                        return (0, 0);
                    }
                    match positivity(kind, z, s, comp.n) {
                        PositivityBand::Zero => (0, 0),
                        PositivityBand::One => (size, size),
                        PositivityBand::Interior => (0, size),
                    }
                };
                let (c_lo, c_hi) = bounds(AgentKind::Conformist);
                let (a_lo, a_hi) = bounds(AgentKind::AntiConformist);
                let (m_lo, m_hi) = bounds(AgentKind::Mixed);
                SuccessorPattern {
                    lo: CountProfile::new(c_lo, a_lo, m_lo),
                    hi: CountProfile::new(c_hi, a_hi, m_hi),
                }
            })
            .collect();
        Ok(Self {
            comp: *comp,
            patterns,
        })
    }

    pub fn composition(&self) -> &SocietyComposition {
        &self.comp
    }

    pub fn pattern(&self, s: u32) -> SuccessorPattern {
        self.patterns[s as usize]
    }
}

/// One absorbing class at count level.
#[derive(Debug, Clone, Serialize)]
pub struct CountClass {
    /// Cardinalities whose successor patterns make up the class.
    pub cards: Vec<u32>,
    pub period: u32,
    /// Cyclic blocks as lists of successor patterns; the block containing
    /// the smallest state comes first.
    pub blocks: Vec<Vec<SuccessorPattern>>,
}

impl CountClass {
    pub fn profiles(&self) -> Vec<CountProfile> {
        let mut out: Vec<CountProfile> = self
            .blocks
            .iter()
            .flatten()
            .flat_map(|p| p.profiles())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn block_profiles(&self, block: usize) -> Vec<CountProfile> {
        let mut out: Vec<CountProfile> = self.blocks[block]
            .iter()
            .flat_map(|p| p.profiles())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn contains(&self, p: CountProfile) -> bool {
        self.blocks.iter().flatten().any(|pat| pat.contains(p))
    }

    pub fn min_state(&self, comp: &SocietyComposition) -> u64 {
        self.blocks
            .iter()
            .flatten()
            .map(|pat| pat.lo.min_state(comp))
            .min()
            .expect("class is nonempty")
    }

    /// Explicit sorted state list (requires small n).
    pub fn states(&self, comp: &SocietyComposition) -> Vec<u64> {
        let mut out: Vec<u64> = self
            .profiles()
            .into_iter()
            .flat_map(|p| p.states(comp))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Strongly connected components of the cardinality digraph, sinks first.
fn card_sccs(chain: &CountChain) -> Vec<Vec<u32>> {
    let n = chain.comp.n as usize;
    const UNVISITED: u32 = u32::MAX;
    let mut index = vec![UNVISITED; n + 1];
    let mut low = vec![0u32; n + 1];
    let mut on_stack = vec![false; n + 1];
    let mut stack: Vec<u32> = Vec::new();
    let mut next = 0u32;
    let mut components = Vec::new();

    struct Frame {
        card: u32,
        next_succ: u32,
        succ_hi: u32,
        pending: Option<u32>,
    }

    for root in 0..=n as u32 {
        if index[root as usize] != UNVISITED {
            continue;
        }
        let (lo, hi) = chain.pattern(root).card_range();
        let mut frames = vec![Frame {
            card: root,
            next_succ: lo,
            succ_hi: hi,
            pending: None,
        }];
        index[root as usize] = next;
        low[root as usize] = next;
        next += 1;
        stack.push(root);
        on_stack[root as usize] = true;

        while let Some(frame) = frames.last_mut() {
            let v = frame.card as usize;
            if let Some(child) = frame.pending.take() {
                low[v] = low[v].min(low[child as usize]);
            }
            let mut descended = false;
            while frame.next_succ <= frame.succ_hi {
                let w = frame.next_succ;
                frame.next_succ += 1;
                if index[w as usize] == UNVISITED {
                    frame.pending = Some(w);
                    index[w as usize] = next;
                    low[w as usize] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w as usize] = true;
                    let (lo, hi) = chain.pattern(w).card_range();
                    frames.push(Frame {
                        card: w,
                        next_succ: lo,
                        succ_hi: hi,
                        pending: None,
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
                    let w = stack.pop().expect("scc stack underflow");
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

/// All absorbing classes, sorted by their smallest member state.
pub fn count_classes(chain: &CountChain) -> Vec<CountClass> {
    let comp = chain.comp;
    let components = card_sccs(chain);
    let mut component_of = vec![0u32; comp.n as usize + 1];
    for (cid, cards) in components.iter().enumerate() {
        for &s in cards {
            component_of[s as usize] = cid as u32;
        }
    }

    let mut classes = Vec::new();
    for (cid, cards) in components.iter().enumerate() {
        let closed = cards.iter().all(|&s| {
            let (lo, hi) = chain.pattern(s).card_range();
            (lo..=hi).all(|t| component_of[t as usize] == cid as u32)
        });
        if !closed {
            continue;
        }

        // BFS depths over the class cardinalities.
        let mut depth = vec![-1i64; comp.n as usize + 1];
        let root = cards[0];
        depth[root as usize] = 0;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            let (lo, hi) = chain.pattern(u).card_range();
            for w in lo..=hi {
                if depth[w as usize] < 0 {
                    depth[w as usize] = depth[u as usize] + 1;
                    queue.push_back(w);
                }
            }
        }
        let mut g: u64 = 0;
        for &u in cards {
            let (lo, hi) = chain.pattern(u).card_range();
            for w in lo..=hi {
                let diff = depth[u as usize] + 1 - depth[w as usize];
                g = gcd(g, diff.unsigned_abs());
            }
        }
        let period = g.max(1) as u32;

        // A pattern joins the block one step after its source cardinality.
        let mut blocks: Vec<Vec<SuccessorPattern>> = vec![Vec::new(); period as usize];
        for &s in cards {
            let b = ((depth[s as usize] + 1) % period as i64) as usize;
            let pattern = chain.pattern(s);
            if !blocks[b].contains(&pattern) {
                blocks[b].push(pattern);
            }
        }
        for block in &mut blocks {
            block.sort_unstable();
        }

        // Rotate so the block with the smallest state comes first.
        let min_states: Vec<u64> = blocks
            .iter()
            .map(|block| {
                block
                    .iter()
                    .map(|p| p.lo.min_state(&comp))
                    .min()
                    .expect("blocks are nonempty")
            })
            .collect();
        let first = min_states
            .iter()
            .enumerate()
            .min_by_key(|(_, &m)| m)
            .map(|(i, _)| i)
            .expect("class has a block");
        blocks.rotate_left(first);

        classes.push(CountClass {
            cards: cards.clone(),
            period,
            blocks,
        });
    }
    classes.sort_by_key(|c| c.min_state(&comp));
    classes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{absorbing_classes, PossibilityDigraph};

    fn comp(n_c: u32, n_a: u32, n_m: u32) -> SocietyComposition {
        SocietyComposition::new(n_c, n_a, n_m).unwrap()
    }

    fn z(l_c: u32, r_c: u32, l_a: u32, r_a: u32) -> InfluenceabilityParams {
        InfluenceabilityParams::new(l_c, r_c, l_a, r_a)
    }

    #[test]
    fn profile_states_enumeration() {
        let c = comp(2, 1, 0);
        let p = CountProfile::new(1, 1, 0);
        assert_eq!(p.states(&c), vec![0b101, 0b110]);
        assert_eq!(p.min_state(&c), 0b101);
    }

    /// The count-level classes must agree exactly with the full state-space
    /// analysis: same state sets, same periods, same block partitions.
    #[test]
    fn quotient_matches_full_chain_exhaustively() {
        for n_c in 0..=5u32 {
            for n_a in 0..=(5 - n_c) {
                for n_m in 0..=(5 - n_c - n_a) {
                    let n = n_c + n_a + n_m;
                    if n == 0 {
                        continue;
                    }
                    let c = comp(n_c, n_a, n_m);
                    for l_c in 0..n {
                        for r_c in 0..n - l_c {
                            for l_a in 0..n {
                                for r_a in 0..n - l_a {
                                    let zz = z(l_c, r_c, l_a, r_a);
                                    let g = PossibilityDigraph::build(&c, &zz).unwrap();
                                    let full = absorbing_classes(&g);
                                    let chain = CountChain::new(&c, &zz).unwrap();
                                    let quotient = count_classes(&chain);
                                    assert_eq!(full.len(), quotient.len(), "{c:?} {zz:?}");
                                    for (f, q) in full.iter().zip(&quotient) {
                                        assert_eq!(f.states, q.states(&c), "{c:?} {zz:?}");
                                        assert_eq!(f.period, q.period, "{c:?} {zz:?}");
                                        let mut qblocks: Vec<Vec<u64>> = (0..q.blocks.len())
                                            .map(|b| {
                                                let mut states: Vec<u64> = q
                                                    .block_profiles(b)
                                                    .into_iter()
                                                    .flat_map(|p| p.states(&c))
                                                    .collect();
                                                states.sort_unstable();
                                                states.dedup();
                                                states
                                            })
                                            .collect();
                                        // Same cyclic order from the same anchor.
                                        assert_eq!(f.blocks.len(), qblocks.len());
                                        qblocks.sort();
                                        let mut fblocks = f.blocks.clone();
                                        fblocks.sort();
                                        assert_eq!(fblocks, qblocks, "{c:?} {zz:?}");
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn degenerate_societies() {
        // All conformists: two consensus states.
        let c = comp(4, 0, 0);
        let chain = CountChain::new(&c, &z(1, 1, 0, 0)).unwrap();
        let classes = count_classes(&chain);
        assert_eq!(classes.len(), 2);
        assert_eq!(classes[0].states(&c), vec![0]);
        assert_eq!(classes[1].states(&c), vec![0b1111]);

        // All anti-conformists: the two consensus states cycle.
        let c = comp(0, 4, 0);
        let chain = CountChain::new(&c, &z(0, 0, 1, 1)).unwrap();
        let classes = count_classes(&chain);
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].states(&c), vec![0, 0b1111]);
        assert_eq!(classes[0].period, 2);

        // All mixed: the full power set.
        let c = comp(0, 0, 4);
        let chain = CountChain::new(&c, &z(1, 1, 1, 1)).unwrap();
        let classes = count_classes(&chain);
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].states(&c).len(), 16);
        assert_eq!(classes[0].period, 1);
    }
}
