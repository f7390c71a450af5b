//! Prediction of the absorbing-class set from parameters alone: one
//! classifier for societies without mixed agents, one for societies with all
//! three groups, and the degenerate single-group cases.
//!
//! Every case carries a closed-form inequality condition evaluated into
//! a per-conjunct trace for auditability. The
//! fired set itself comes from the exact count-level quotient
//! ([`crate::counts`]), which is still purely parameter-driven: the
//! inequality conditions are simplifications that treat count intervals as
//! real intervals and can misjudge tuples where an interval holds no integer
//! (for example when `l + r = n - 1` leaves a rule without interior band).
//! The per-case `exact` flag makes any such disagreement visible.

use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::counts::{count_classes, CountChain, CountClass, CountProfile};
use crate::model::{validate, ConstraintViolation, InfluenceabilityParams, SocietyComposition};
use crate::transitions::{enumerate_interval, MarkerSet};

/// Identifier of one of the twenty canonical absorbing-class forms, in the
/// family for societies without (`P`) or with (`M`) mixed agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CanonicalId {
    Pure(u8),
    Mixed(u8),
}

impl fmt::Display for CanonicalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CanonicalId::Pure(k) => write!(f, "P{k}"),
            CanonicalId::Mixed(k) => write!(f, "M{k}"),
        }
    }
}

impl Serialize for CanonicalId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("no closed-form classifier for composition n_c={n_c}, n_a={n_a}, n_m={n_m}")]
    UnsupportedComposition { n_c: u32, n_a: u32, n_m: u32 },
    #[error(transparent)]
    Invalid(#[from] ConstraintViolation),
}

/// Which classifier applies to a composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Pure,
    Mixed,
    AllConformist,
    AllAntiConformist,
    AllMixed,
}

pub fn regime_of(comp: &SocietyComposition) -> Result<Regime, TheoryError> {
    match (comp.n_c, comp.n_a, comp.n_m) {
        (_, _, m) if m == comp.n => Ok(Regime::AllMixed),
        (c, 0, 0) if c == comp.n => Ok(Regime::AllConformist),
        (0, a, 0) if a == comp.n => Ok(Regime::AllAntiConformist),
        (c, a, 0) if c >= 1 && a >= 1 => Ok(Regime::Pure),
        (c, a, m) if c >= 1 && a >= 1 && m >= 1 => Ok(Regime::Mixed),
        (c, a, m) => Err(TheoryError::UnsupportedComposition {
            n_c: c,
            n_a: a,
            n_m: m,
        }),
    }
}

/// One evaluated inequality with its truth value.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionTrace {
    pub predicate: &'static str,
    pub holds: bool,
}

/// One canonical case: the closed-form condition trace plus whether the
/// exact analysis confirms the class at this tuple.
#[derive(Debug, Clone, Serialize)]
pub struct CaseEvaluation {
    pub id: CanonicalId,
    pub description: &'static str,
    /// Truth of the closed-form inequality condition.
    pub fired: bool,
    /// Truth according to the exact count-level analysis.
    pub exact: bool,
    pub trace: Vec<ConditionTrace>,
}

/// Classifier output.
#[derive(Debug, Clone, Serialize)]
pub struct Prediction {
    pub regime: Regime,
    /// Every case with its condition trace (empty for single-group regimes).
    pub cases: Vec<CaseEvaluation>,
    /// Canonical forms realized according to the exact analysis.
    pub fired: Vec<CanonicalId>,
    /// The exact classes with their periods.
    pub classes: Vec<ExactClass>,
}

/// One exact class labelled with the canonical forms it realizes.
#[derive(Debug, Clone, Serialize)]
pub struct ExactClass {
    /// Canonical forms whose state set (and, when possible, period) equals
    /// this class; distinct forms can coincide at degenerate group sizes.
    /// Empty only if the class matches no canonical form.
    pub ids: Vec<CanonicalId>,
    pub class: CountClass,
}

fn in_open(x: i64, a: i64, b: i64) -> bool {
    a < x && x < b
}

fn in_lopen_rclosed(x: i64, a: i64, b: i64) -> bool {
    a < x && x <= b
}

struct CaseBuilder {
    id: CanonicalId,
    description: &'static str,
    trace: Vec<ConditionTrace>,
}

impl CaseBuilder {
    fn new(id: CanonicalId, description: &'static str) -> Self {
        Self {
            id,
            description,
            trace: Vec::new(),
        }
    }

    fn req(mut self, predicate: &'static str, holds: bool) -> Self {
        self.trace.push(ConditionTrace { predicate, holds });
        self
    }

    fn build(self) -> CaseEvaluation {
        let fired = self.trace.iter().all(|t| t.holds);
        CaseEvaluation {
            id: self.id,
            description: self.description,
            fired,
            exact: false,
            trace: self.trace,
        }
    }
}

/// Evaluate the nineteen inequality conditions for a society without mixed
/// agents. Sizes are plain integers so the same evaluators serve both exact
/// sweeps and large-population grids.
pub fn evaluate_pure_cases(n: i64, n_c: i64, z: &InfluenceabilityParams) -> Vec<CaseEvaluation> {
    let (l_c, r_c, l_a, r_a) = (z.l_c as i64, z.r_c as i64, z.l_a as i64, z.r_a as i64);
    use CanonicalId::Pure as P;
    vec![
        CaseBuilder::new(P(1), "absorbing state {N_a}")
            .req(
                "n_c >= max(n - l_c, n - l_a)",
                n_c >= (n - l_c).max(n - l_a),
            )
            .build(),
        CaseBuilder::new(P(2), "absorbing state {N_c}")
            .req(
                "n_c >= max(n - r_c, n - r_a)",
                n_c >= (n - r_c).max(n - r_a),
            )
            .build(),
        CaseBuilder::new(P(3), "cycle {N_a} -> {empty} -> {N_a}")
            .req("n - l_c <= n_c <= r_a", n - l_c <= n_c && n_c <= r_a)
            .build(),
        CaseBuilder::new(P(4), "cycle {N_c} -> {N} -> {N_c}")
            .req("n - r_c <= n_c <= l_a", n - r_c <= n_c && n_c <= l_a)
            .build(),
        CaseBuilder::new(P(5), "cycle {N_a} -> {N_c} -> {N_a}")
            .req(
                "n_c <= min(l_c, l_a, r_c, r_a)",
                n_c <= l_c.min(l_a).min(r_c).min(r_a),
            )
            .build(),
        CaseBuilder::new(P(6), "cycle {empty} -> {N_a} -> {N_c} -> {empty}")
            .req("n_c <= min(r_c, r_a, l_c)", n_c <= r_c.min(r_a).min(l_c))
            .req("n_c >= n - r_a", n_c >= n - r_a)
            .build(),
        CaseBuilder::new(P(7), "cycle {N_a} -> {N} -> {N_c} -> {N_a}")
            .req("n_c <= min(l_c, l_a, r_c)", n_c <= l_c.min(l_a).min(r_c))
            .req("n_c >= n - l_a", n_c >= n - l_a)
            .build(),
        CaseBuilder::new(P(8), "periodic {N_a} -> [empty, N_c] -> {N_a}")
            .req("n_c <= min(l_c, l_a, r_a)", n_c <= l_c.min(l_a).min(r_a))
            .req("r_c < n_c < n - l_c", in_open(n_c, r_c, n - l_c))
            .build(),
        CaseBuilder::new(P(9), "periodic {N_c} -> [N_a, N] -> {N_c}")
            .req("n_c <= min(r_c, r_a, l_a)", n_c <= r_c.min(r_a).min(l_a))
            .req("l_c < n_c < n - r_c", in_open(n_c, l_c, n - r_c))
            .build(),
        CaseBuilder::new(P(10), "periodic [empty, N_c] -> [N_a, N] -> [empty, N_c]")
            .req("max(r_c, l_c) < n_c", r_c.max(l_c) < n_c)
            .req(
                "n_c <= min(r_a, l_a, n - l_c - 1, n - r_c - 1)",
                n_c <= r_a.min(l_a).min(n - l_c - 1).min(n - r_c - 1),
            )
            .build(),
        CaseBuilder::new(P(11), "interval [empty, N_a]")
            .req(
                "max(n - l_c, r_a + 1) <= n_c < n - l_a",
                (n - l_c).max(r_a + 1) <= n_c && n_c < n - l_a,
            )
            .build(),
        CaseBuilder::new(P(12), "interval [N_c, N]")
            .req(
                "max(n - r_c, l_a + 1) <= n_c < n - r_a",
                (n - r_c).max(l_a + 1) <= n_c && n_c < n - r_a,
            )
            .build(),
        CaseBuilder::new(P(13), "union [empty, N_a] + [empty, N_c]")
            .req("l_c >= n - r_a", l_c >= n - r_a)
            .req(
                "n_c in (]r_c, n-l_c[ & ]l_a, n-r_c[) | ((]l_a, n-r_a[ | ]l_c, n-r_c[) & ]0, r_c])",
                (in_open(n_c, r_c, n - l_c) && in_open(n_c, l_a, n - r_c))
                    || ((in_open(n_c, l_a, n - r_a) || in_open(n_c, l_c, n - r_c))
                        && in_lopen_rclosed(n_c, 0, r_c)),
            )
            .build(),
        CaseBuilder::new(P(14), "union [N_a, N] + [N_c, N]")
            .req("l_a >= n - r_c", l_a >= n - r_c)
            .req(
                "n_c in (]l_c, n-r_c[ & ]r_a, n-l_c[) | ((]r_a, n-l_a[ | ]r_c, n-l_c[) & ]0, l_c])",
                (in_open(n_c, l_c, n - r_c) && in_open(n_c, r_a, n - l_c))
                    || ((in_open(n_c, r_a, n - l_a) || in_open(n_c, r_c, n - l_c))
                        && in_lopen_rclosed(n_c, 0, l_c)),
            )
            .build(),
        CaseBuilder::new(P(15), "union [empty, N_a] + {N_c}")
            .req("l_c + r_c == n - 1", l_c + r_c == n - 1)
            .req("r_a >= r_c", r_a >= r_c)
            .req("l_c > l_a", l_c > l_a)
            .req(
                "l_a < n_c < min(n - r_a, n - l_c)",
                l_a < n_c && n_c < (n - r_a).min(n - l_c),
            )
            .build(),
        CaseBuilder::new(P(16), "union [N_c, N] + {N_a}")
            .req("l_c + r_c == n - 1", l_c + r_c == n - 1)
            .req("l_a >= l_c", l_a >= l_c)
            .req("r_c > r_a", r_c > r_a)
            .req(
                "r_a < n_c < min(n - l_a, n - r_c)",
                r_a < n_c && n_c < (n - l_a).min(n - r_c),
            )
            .build(),
        CaseBuilder::new(P(17), "union [empty, N_c] + {N_a}")
            .req("l_a + r_a == n - 1", l_a + r_a == n - 1)
            .req("l_c >= l_a", l_c >= l_a)
            .req("n_c < n - r_c", n_c < n - r_c)
            .req(
                "n_c in ]r_c, n-l_c[ | ]l_c, r_c]",
                in_open(n_c, r_c, n - l_c) || in_lopen_rclosed(n_c, l_c, r_c),
            )
            .build(),
        CaseBuilder::new(P(18), "union [N_a, N] + {N_c}")
            .req("l_a + r_a == n - 1", l_a + r_a == n - 1)
            .req("r_c >= r_a", r_c >= r_a)
            .req("n_c < n - l_c", n_c < n - l_c)
            .req(
                "n_c in ]l_c, n-r_c[ | ]r_c, l_c]",
                in_open(n_c, l_c, n - r_c) || in_lopen_rclosed(n_c, r_c, l_c),
            )
            .build(),
        CaseBuilder::new(P(19), "union [empty, N_a] + [N_c, N]")
            .req("l_c + r_c == n - 1", l_c + r_c == n - 1)
            .req(
                "max(l_a, r_a) < n_c <= min(l_c, r_c)",
                l_a.max(r_a) < n_c && n_c <= l_c.min(r_c),
            )
            .build(),
    ]
}

/// Evaluate the nineteen inequality conditions for a society with all three
/// groups present.
pub fn evaluate_mixed_cases(
    n: i64,
    n_c: i64,
    n_m: i64,
    z: &InfluenceabilityParams,
) -> Vec<CaseEvaluation> {
    let (l_c, r_c, l_a, r_a) = (z.l_c as i64, z.r_c as i64, z.l_a as i64, z.r_a as i64);
    use CanonicalId::Mixed as M;
    vec![
        CaseBuilder::new(M(1), "interval [N_a, N_a+N_m]")
            .req("n_c >= max(n - l_c, n - l_a)", n_c >= (n - l_c).max(n - l_a))
            .build(),
        CaseBuilder::new(M(2), "interval [N_c, N_c+N_m]")
            .req("n_c >= max(n - r_c, n - r_a)", n_c >= (n - r_c).max(n - r_a))
            .build(),
        CaseBuilder::new(M(3), "interval [empty, N_a+N_m]")
            .req(
                "max(n - l_c, r_a + 1) <= n_c < n - l_a",
                (n - l_c).max(r_a + 1) <= n_c && n_c < n - l_a,
            )
            .build(),
        CaseBuilder::new(M(4), "interval [N_c, N]")
            .req(
                "max(n - r_c, l_a + 1) <= n_c < n - r_a",
                (n - r_c).max(l_a + 1) <= n_c && n_c < n - r_a,
            )
            .build(),
        CaseBuilder::new(M(5), "periodic [N_a, N_a+N_m] -> {empty} -> [N_a, N_a+N_m]")
            .req("n - l_c <= n_c <= r_a - n_m", n - l_c <= n_c && n_c <= r_a - n_m)
            .build(),
        CaseBuilder::new(M(6), "periodic [N_c, N_c+N_m] -> {N} -> [N_c, N_c+N_m]")
            .req("n - r_c <= n_c <= l_a - n_m", n - r_c <= n_c && n_c <= l_a - n_m)
            .build(),
        CaseBuilder::new(M(7), "periodic [N_a, N_a+N_m] -> [N_c, N_c+N_m] -> [N_a, N_a+N_m]")
            .req(
                "n_c + n_m <= min(l_c, l_a, r_c, r_a)",
                n_c + n_m <= l_c.min(l_a).min(r_c).min(r_a),
            )
            .build(),
        CaseBuilder::new(M(8), "periodic {empty} -> [N_a, N_a+N_m] -> [N_c, N_c+N_m] -> {empty}")
            .req("n_c + n_m <= min(r_c, r_a, l_c)", n_c + n_m <= r_c.min(r_a).min(l_c))
            .req("n_c >= n - r_a", n_c >= n - r_a)
            .build(),
        CaseBuilder::new(M(9), "periodic [N_a, N_a+N_m] -> {N} -> [N_c, N_c+N_m] -> [N_a, N_a+N_m]")
            .req("n_c + n_m <= min(l_c, l_a, r_c)", n_c + n_m <= l_c.min(l_a).min(r_c))
            .req("n_c >= n - l_a", n_c >= n - l_a)
            .build(),
        CaseBuilder::new(M(10), "periodic [N_a, N_a+N_m] -> [empty, N_c+N_m] -> [N_a, N_a+N_m]")
            .req("n_c + n_m <= min(l_c, l_a, r_a)", n_c + n_m <= l_c.min(l_a).min(r_a))
            .req("r_c - n_m < n_c < n - l_c", in_open(n_c, r_c - n_m, n - l_c))
            .build(),
        CaseBuilder::new(M(11), "periodic [N_c, N_c+N_m] -> [N_a, N] -> [N_c, N_c+N_m]")
            .req("n_c + n_m <= min(r_c, r_a, l_a)", n_c + n_m <= r_c.min(r_a).min(l_a))
            .req("l_c - n_m < n_c < n - r_c", in_open(n_c, l_c - n_m, n - r_c))
            .build(),
        CaseBuilder::new(M(12), "periodic [empty, N_c+N_m] -> [N_a, N] -> [empty, N_c+N_m]")
            .req("max(l_c, r_c) < n_c + n_m", l_c.max(r_c) < n_c + n_m)
            .req(
                "n_c + n_m <= min(r_a, l_a, n - l_c - 1, n - r_c - 1)",
                n_c + n_m <= r_a.min(l_a).min(n - (l_c + 1)).min(n - (r_c + 1)),
            )
            .build(),
        CaseBuilder::new(M(13), "union [empty, N_a+N_m] + [empty, N_c+N_m]")
            .req("l_c >= n - r_a", l_c >= n - r_a)
            .req(
                "n_c in (]r_c-n_m, n-l_c[ & ]l_a, n-r_c[) | ((]l_a-n_m, n-r_a[ | ]l_c-n_m, n-r_c[) & ]0, r_c-n_m])",
                (in_open(n_c, r_c - n_m, n - l_c) && in_open(n_c, l_a, n - r_c))
                    || ((in_open(n_c, l_a - n_m, n - r_a) || in_open(n_c, l_c - n_m, n - r_c))
                        && in_lopen_rclosed(n_c, 0, r_c - n_m)),
            )
            .build(),
        CaseBuilder::new(M(14), "union [N_a, N] + [N_c, N]")
            .req("r_c >= n - l_a", r_c >= n - l_a)
            .req(
                "n_c in (]l_c-n_m, n-r_c[ & ]r_a, n-l_c[) | ((]r_a-n_m, n-l_a[ | ]r_c-n_m, n-l_c[) & ]0, l_c-n_m])",
                (in_open(n_c, l_c - n_m, n - r_c) && in_open(n_c, r_a, n - l_c))
                    || ((in_open(n_c, r_a - n_m, n - l_a) || in_open(n_c, r_c - n_m, n - l_c))
                        && in_lopen_rclosed(n_c, 0, l_c - n_m)),
            )
            .build(),
        CaseBuilder::new(M(15), "union [empty, N_a+N_m] + [N_c, N_c+N_m]")
            .req("l_c + r_c == n - 1", l_c + r_c == n - 1)
            .req("r_c <= r_a", r_c <= r_a)
            .req("l_c > l_a", l_c > l_a)
            .req("n_c < n - l_c", n_c < n - l_c)
            .req("l_a < n_c + n_m < n - r_a", in_open(n_c + n_m, l_a, n - r_a))
            .build(),
        CaseBuilder::new(M(16), "union [N_c, N] + [N_a, N_a+N_m]")
            .req("l_c + r_c == n - 1", l_c + r_c == n - 1)
            .req("l_c <= l_a", l_c <= l_a)
            .req("r_a < r_c", r_a < r_c)
            .req("n_c < n - r_c", n_c < n - r_c)
            .req("r_a < n_c + n_m < n - l_a", in_open(n_c + n_m, r_a, n - l_a))
            .build(),
        CaseBuilder::new(M(17), "union [empty, N_c+N_m] + [N_a, N_a+N_m]")
            .req("l_a + r_a == n - 1", l_a + r_a == n - 1)
            .req("l_c >= l_a", l_c >= l_a)
            .req("n_c < n - r_c", n_c < n - r_c)
            .req(
                "n_c in ]r_c-n_m, n-l_c[ | ]l_c-n_m, r_c-n_m[",
                in_open(n_c, r_c - n_m, n - l_c) || in_open(n_c, l_c - n_m, r_c - n_m),
            )
            .build(),
        CaseBuilder::new(M(18), "union [N_a, N] + [N_c, N_c+N_m]")
            .req("l_a + r_a == n - 1", l_a + r_a == n - 1)
            .req("r_c >= r_a", r_c >= r_a)
            .req("n_c < n - l_c", n_c < n - l_c)
            .req(
                "n_c in ]l_c-n_m, n-r_c[ | ]r_c-n_m, l_c-n_m[",
                in_open(n_c, l_c - n_m, n - r_c) || in_open(n_c, r_c - n_m, l_c - n_m),
            )
            .build(),
        CaseBuilder::new(M(19), "union [empty, N_a+N_m] + [N_c, N]")
            .req("l_c + r_c == n - 1", l_c + r_c == n - 1)
            .req(
                "max(l_a, r_a) < n_c <= min(l_c, r_c)",
                l_a.max(r_a) < n_c && n_c <= l_c.min(r_c),
            )
            .build(),
    ]
}

/// A canonical class resolved to explicit states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResolvedClass {
    /// Sorted state bitmasks.
    pub states: Vec<u64>,
    pub period: u32,
    /// Cyclic blocks (one block when aperiodic), each sorted; the block
    /// containing the smallest state comes first.
    pub blocks: Vec<Vec<u64>>,
    /// Interval parts `(lower, upper)` whose union is the state set.
    pub parts: Vec<(u64, u64)>,
    /// Canonical ids associated with this class (empty for classes outside
    /// the two twenty-case families).
    pub sources: Vec<CanonicalId>,
}

/// Symbolic shape of one canonical form: cyclic blocks of marker intervals.
struct FormSpec {
    id: CanonicalId,
    blocks: &'static [&'static [(MarkerSet, MarkerSet)]],
}

use MarkerSet::{Empty, Full, Na, NaUnionNm, Nc, NcUnionNm};

const PURE_FORMS: [FormSpec; 20] = [
    FormSpec {
        id: CanonicalId::Pure(1),
        blocks: &[&[(Na, Na)]],
    },
    FormSpec {
        id: CanonicalId::Pure(2),
        blocks: &[&[(Nc, Nc)]],
    },
    FormSpec {
        id: CanonicalId::Pure(3),
        blocks: &[&[(Na, Na)], &[(Empty, Empty)]],
    },
    FormSpec {
        id: CanonicalId::Pure(4),
        blocks: &[&[(Nc, Nc)], &[(Full, Full)]],
    },
    FormSpec {
        id: CanonicalId::Pure(5),
        blocks: &[&[(Na, Na)], &[(Nc, Nc)]],
    },
    FormSpec {
        id: CanonicalId::Pure(6),
        blocks: &[&[(Empty, Empty)], &[(Na, Na)], &[(Nc, Nc)]],
    },
    FormSpec {
        id: CanonicalId::Pure(7),
        blocks: &[&[(Na, Na)], &[(Full, Full)], &[(Nc, Nc)]],
    },
    FormSpec {
        id: CanonicalId::Pure(8),
        blocks: &[&[(Na, Na)], &[(Empty, Nc)]],
    },
    FormSpec {
        id: CanonicalId::Pure(9),
        blocks: &[&[(Nc, Nc)], &[(Na, Full)]],
    },
    FormSpec {
        id: CanonicalId::Pure(10),
        blocks: &[&[(Empty, Nc)], &[(Na, Full)]],
    },
    FormSpec {
        id: CanonicalId::Pure(11),
        blocks: &[&[(Empty, Na)]],
    },
    FormSpec {
        id: CanonicalId::Pure(12),
        blocks: &[&[(Nc, Full)]],
    },
    FormSpec {
        id: CanonicalId::Pure(13),
        blocks: &[&[(Empty, Na), (Empty, Nc)]],
    },
    FormSpec {
        id: CanonicalId::Pure(14),
        blocks: &[&[(Na, Full), (Nc, Full)]],
    },
    FormSpec {
        id: CanonicalId::Pure(15),
        blocks: &[&[(Empty, Na), (Nc, Nc)]],
    },
    FormSpec {
        id: CanonicalId::Pure(16),
        blocks: &[&[(Nc, Full), (Na, Na)]],
    },
    FormSpec {
        id: CanonicalId::Pure(17),
        blocks: &[&[(Empty, Nc), (Na, Na)]],
    },
    FormSpec {
        id: CanonicalId::Pure(18),
        blocks: &[&[(Na, Full), (Nc, Nc)]],
    },
    FormSpec {
        id: CanonicalId::Pure(19),
        blocks: &[&[(Empty, Na), (Nc, Full)]],
    },
    FormSpec {
        id: CanonicalId::Pure(20),
        blocks: &[&[(Empty, Full)]],
    },
];

const MIXED_FORMS: [FormSpec; 20] = [
    FormSpec {
        id: CanonicalId::Mixed(1),
        blocks: &[&[(Na, NaUnionNm)]],
    },
    FormSpec {
        id: CanonicalId::Mixed(2),
        blocks: &[&[(Nc, NcUnionNm)]],
    },
    FormSpec {
        id: CanonicalId::Mixed(3),
        blocks: &[&[(Empty, NaUnionNm)]],
    },
    FormSpec {
        id: CanonicalId::Mixed(4),
        blocks: &[&[(Nc, Full)]],
    },
    FormSpec {
        id: CanonicalId::Mixed(5),
        blocks: &[&[(Na, NaUnionNm)], &[(Empty, Empty)]],
    },
    FormSpec {
        id: CanonicalId::Mixed(6),
        blocks: &[&[(Nc, NcUnionNm)], &[(Full, Full)]],
    },
    FormSpec {
        id: CanonicalId::Mixed(7),
        blocks: &[&[(Na, NaUnionNm)], &[(Nc, NcUnionNm)]],
    },
    FormSpec {
        id: CanonicalId::Mixed(8),
        blocks: &[&[(Empty, Empty)], &[(Na, NaUnionNm)], &[(Nc, NcUnionNm)]],
    },
    FormSpec {
        id: CanonicalId::Mixed(9),
        blocks: &[&[(Na, NaUnionNm)], &[(Full, Full)], &[(Nc, NcUnionNm)]],
    },
    FormSpec {
        id: CanonicalId::Mixed(10),
        blocks: &[&[(Na, NaUnionNm)], &[(Empty, NcUnionNm)]],
    },
    FormSpec {
        id: CanonicalId::Mixed(11),
        blocks: &[&[(Nc, NcUnionNm)], &[(Na, Full)]],
    },
    FormSpec {
        id: CanonicalId::Mixed(12),
        blocks: &[&[(Empty, NcUnionNm)], &[(Na, Full)]],
    },
    FormSpec {
        id: CanonicalId::Mixed(13),
        blocks: &[&[(Empty, NaUnionNm), (Empty, NcUnionNm)]],
    },
    FormSpec {
        id: CanonicalId::Mixed(14),
        blocks: &[&[(Na, Full), (Nc, Full)]],
    },
    FormSpec {
        id: CanonicalId::Mixed(15),
        blocks: &[&[(Empty, NaUnionNm), (Nc, NcUnionNm)]],
    },
    FormSpec {
        id: CanonicalId::Mixed(16),
        blocks: &[&[(Nc, Full), (Na, NaUnionNm)]],
    },
    FormSpec {
        id: CanonicalId::Mixed(17),
        blocks: &[&[(Empty, NcUnionNm), (Na, NaUnionNm)]],
    },
    FormSpec {
        id: CanonicalId::Mixed(18),
        blocks: &[&[(Na, Full), (Nc, NcUnionNm)]],
    },
    FormSpec {
        id: CanonicalId::Mixed(19),
        blocks: &[&[(Empty, NaUnionNm), (Nc, Full)]],
    },
    FormSpec {
        id: CanonicalId::Mixed(20),
        blocks: &[&[(Empty, Full)]],
    },
];

/// Largest n for which classes are materialized to explicit state lists.
pub const MATERIALIZE_CAP: u32 = 20;

fn profile_of_mask(mask: u64, comp: &SocietyComposition) -> CountProfile {
    CountProfile::new(
        (mask & comp.conformist_mask()).count_ones(),
        (mask & comp.anti_conformist_mask()).count_ones(),
        (mask & comp.mixed_mask()).count_ones(),
    )
}

/// Count profiles of one canonical form (sorted, deduplicated) and its
/// structural period.
fn form_profiles(spec: &FormSpec, comp: &SocietyComposition) -> (Vec<CountProfile>, u32) {
    let mut profiles = Vec::new();
    for block in spec.blocks {
        for &(lo, hi) in *block {
            let lo = profile_of_mask(lo.resolve(comp), comp);
            let hi = profile_of_mask(hi.resolve(comp), comp);
            for k_c in lo.k_c..=hi.k_c {
                for k_a in lo.k_a..=hi.k_a {
                    for k_m in lo.k_m..=hi.k_m {
                        profiles.push(CountProfile::new(k_c, k_a, k_m));
                    }
                }
            }
        }
    }
    profiles.sort_unstable();
    let total = profiles.len();
    profiles.dedup();
    // Blocks of a periodic form can collapse onto each other at degenerate
    // group sizes; treat the form as aperiodic then.
    let period = if profiles.len() < total {
        1
    } else {
        spec.blocks.len() as u32
    };
    (profiles, period)
}

fn materialize_form(spec: &FormSpec, comp: &SocietyComposition) -> ResolvedClass {
    assert!(
        comp.n <= MATERIALIZE_CAP,
        "n={} too large to materialize",
        comp.n
    );
    let mut blocks: Vec<Vec<u64>> = Vec::with_capacity(spec.blocks.len());
    let mut parts = Vec::new();
    for block_parts in spec.blocks {
        let mut block = Vec::new();
        for &(lo, hi) in *block_parts {
            let lo = lo.resolve(comp);
            let hi = hi.resolve(comp);
            parts.push((lo, hi));
            block.extend(enumerate_interval(lo, hi));
        }
        block.sort_unstable();
        block.dedup();
        blocks.push(block);
    }
    let mut states: Vec<u64> = blocks.iter().flatten().copied().collect();
    states.sort_unstable();
    let total: usize = blocks.iter().map(Vec::len).sum();
    states.dedup();
    let (period, blocks) = if states.len() < total {
        (1, vec![states.clone()])
    } else {
        (blocks.len() as u32, rotate_blocks(blocks))
    };
    ResolvedClass {
        states,
        period,
        blocks,
        parts,
        sources: vec![spec.id],
    }
}

/// Rotate cyclic blocks so the block containing the smallest state is first.
fn rotate_blocks(blocks: Vec<Vec<u64>>) -> Vec<Vec<u64>> {
    let Some(min_state) = blocks.iter().flatten().min().copied() else {
        return blocks;
    };
    let pos = blocks
        .iter()
        .position(|b| b.contains(&min_state))
        .expect("min state is in some block");
    let mut rotated = blocks;
    rotated.rotate_left(pos);
    rotated
}

fn forms_for(regime: Regime) -> &'static [FormSpec] {
    match regime {
        Regime::Pure => &PURE_FORMS,
        Regime::Mixed => &MIXED_FORMS,
        _ => &[],
    }
}

/// Materialize every canonical form of the regime applicable to `comp`
/// (structural periods; used to label brute-force classes).
pub fn canonical_candidates(comp: &SocietyComposition) -> Vec<ResolvedClass> {
    let Ok(regime) = regime_of(comp) else {
        return Vec::new();
    };
    forms_for(regime)
        .iter()
        .map(|spec| materialize_form(spec, comp))
        .collect()
}

/// Label the exact classes with the canonical forms they realize.
fn label_classes(
    classes: Vec<CountClass>,
    forms: &'static [FormSpec],
    comp: &SocietyComposition,
) -> Vec<ExactClass> {
    let labelled: Vec<(Vec<CountProfile>, u32, &FormSpec)> = forms
        .iter()
        .map(|spec| {
            let (profiles, period) = form_profiles(spec, comp);
            (profiles, period, spec)
        })
        .collect();
    classes
        .into_iter()
        .map(|class| {
            let profiles = class.profiles();
            let set_matches: Vec<(&FormSpec, u32)> = labelled
                .iter()
                .filter(|(p, _, _)| *p == profiles)
                .map(|(_, period, spec)| (*spec, *period))
                .collect();
            let with_period: Vec<CanonicalId> = set_matches
                .iter()
                .filter(|(_, period)| *period == class.period)
                .map(|(spec, _)| spec.id)
                .collect();
            let mut ids = if with_period.is_empty() {
                set_matches.iter().map(|(spec, _)| spec.id).collect()
            } else {
                with_period
            };
            ids.sort_unstable();
            ExactClass { ids, class }
        })
        .collect()
}

/// The exact classes of any composition; canonical labels are attached only
/// when one of the two twenty-case families applies.
pub fn exact_classes(
    comp: &SocietyComposition,
    z: &InfluenceabilityParams,
) -> Result<Vec<ExactClass>, ConstraintViolation> {
    let chain = CountChain::new(comp, z)?;
    let forms = regime_of(comp).map_or(&[][..], forms_for);
    Ok(label_classes(count_classes(&chain), forms, comp))
}

fn run_exact(
    comp: &SocietyComposition,
    z: &InfluenceabilityParams,
    regime: Regime,
) -> Result<(Vec<CanonicalId>, Vec<ExactClass>), ConstraintViolation> {
    let chain = CountChain::new(comp, z)?;
    let classes = label_classes(count_classes(&chain), forms_for(regime), comp);
    let mut fired: Vec<CanonicalId> = classes.iter().flat_map(|c| c.ids.clone()).collect();
    fired.sort_unstable();
    fired.dedup();
    Ok((fired, classes))
}

fn assemble(
    comp: &SocietyComposition,
    z: &InfluenceabilityParams,
    regime: Regime,
    mut cases: Vec<CaseEvaluation>,
) -> Result<Prediction, TheoryError> {
    let (fired, classes) = run_exact(comp, z, regime)?;
    for case in cases.iter_mut() {
        case.exact = fired.contains(&case.id);
    }
    Ok(Prediction {
        regime,
        cases,
        fired,
        classes,
    })
}

/// Classifier for societies of conformists and anti-conformists only.
pub fn predict_pure(
    comp: &SocietyComposition,
    z: &InfluenceabilityParams,
) -> Result<Prediction, TheoryError> {
    validate(comp, z)?;
    if regime_of(comp)? != Regime::Pure {
        return Err(TheoryError::UnsupportedComposition {
            n_c: comp.n_c,
            n_a: comp.n_a,
            n_m: comp.n_m,
        });
    }
    let cases = evaluate_pure_cases(comp.n as i64, comp.n_c as i64, z);
    assemble(comp, z, Regime::Pure, cases)
}

/// Classifier for societies with conformists, anti-conformists, and mixed
/// agents all present.
pub fn predict_mixed(
    comp: &SocietyComposition,
    z: &InfluenceabilityParams,
) -> Result<Prediction, TheoryError> {
    validate(comp, z)?;
    if regime_of(comp)? != Regime::Mixed {
        return Err(TheoryError::UnsupportedComposition {
            n_c: comp.n_c,
            n_a: comp.n_a,
            n_m: comp.n_m,
        });
    }
    let cases = evaluate_mixed_cases(comp.n as i64, comp.n_c as i64, comp.n_m as i64, z);
    assemble(comp, z, Regime::Mixed, cases)
}

/// Classifier for single-group societies.
pub fn predict_degenerate(
    comp: &SocietyComposition,
    z: &InfluenceabilityParams,
) -> Result<Prediction, TheoryError> {
    validate(comp, z)?;
    let regime = regime_of(comp)?;
    match regime {
        Regime::AllConformist | Regime::AllAntiConformist | Regime::AllMixed => {
            assemble(comp, z, regime, Vec::new())
        }
        _ => Err(TheoryError::UnsupportedComposition {
            n_c: comp.n_c,
            n_a: comp.n_a,
            n_m: comp.n_m,
        }),
    }
}

/// Dispatch to the classifier matching the composition.
pub fn predict(
    comp: &SocietyComposition,
    z: &InfluenceabilityParams,
) -> Result<Prediction, TheoryError> {
    match regime_of(comp)? {
        Regime::Pure => predict_pure(comp, z),
        Regime::Mixed => predict_mixed(comp, z),
        _ => predict_degenerate(comp, z),
    }
}

/// Resolve a prediction to explicit state-level classes.
pub fn materialize(prediction: &Prediction, comp: &SocietyComposition) -> Vec<ResolvedClass> {
    materialize_classes(&prediction.classes, comp)
}

/// Resolve exact classes to explicit state-level classes.
pub fn materialize_classes(
    classes: &[ExactClass],
    comp: &SocietyComposition,
) -> Vec<ResolvedClass> {
    assert!(
        comp.n <= MATERIALIZE_CAP,
        "n={} too large to materialize",
        comp.n
    );
    classes
        .iter()
        .map(|exact| {
            let class = &exact.class;
            let states = class.states(comp);
            let blocks: Vec<Vec<u64>> = (0..class.blocks.len())
                .map(|b| {
                    let mut block: Vec<u64> = class
                        .block_profiles(b)
                        .into_iter()
                        .flat_map(|p| p.states(comp))
                        .collect();
                    block.sort_unstable();
                    block.dedup();
                    block
                })
                .collect();
            let mut parts: Vec<(u64, u64)> = class
                .blocks
                .iter()
                .flatten()
                .map(|pattern| pattern.state_bounds(comp))
                .collect();
            parts.sort_unstable();
            parts.dedup();
            ResolvedClass {
                states,
                period: class.period,
                blocks,
                parts,
                sources: exact.ids.clone(),
            }
        })
        .collect()
}
