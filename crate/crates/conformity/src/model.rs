//! Society composition, influenceability thresholds, aggregation rules,
//! positivity bands, and the OWA-weight correspondence.
//!
//! Agents are laid out in fixed index blocks: conformists first, then
//! anti-conformists, then mixed agents. States are bitmasks over those
//! indices, so every named group resolves to a constant-time mask.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Behavioural group of an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Conformist,
    AntiConformist,
    Mixed,
}

/// Violations of the model constraints, naming the failed inequality.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstraintViolation {
    #[error("society must contain at least one agent")]
    EmptySociety,
    #[error("group sizes must satisfy n = n_c + n_a + n_m (n={n}, sum={sum})")]
    CompositionSum { n: u32, sum: u32 },
    #[error(
        "need l_c + r_c < n when conformists or mixed agents are present ({l_c} + {r_c} >= {n})"
    )]
    ConformistThresholds { l_c: u32, r_c: u32, n: u32 },
    #[error("need l_a + r_a < n when anti-conformists or mixed agents are present ({l_a} + {r_a} >= {n})")]
    AntiConformistThresholds { l_a: u32, r_a: u32, n: u32 },
    #[error("mixing coefficient must lie strictly between 0 and 1 (got {0})")]
    AlphaRange(f64),
    #[error("expected {expected} mixing coefficients, got {got}")]
    AlphaCount { expected: usize, got: usize },
    #[error("mixing coefficient is only meaningful for mixed agents")]
    UnexpectedAlpha,
    #[error("mixed agents need a mixing coefficient")]
    MissingAlpha,
    #[error("rule table must have n + 1 = {expected} entries, got {got}")]
    RuleLength { expected: usize, got: usize },
    #[error("rule value {value} at s={s} outside [0, 1]")]
    RuleRange { s: u32, value: f64 },
    #[error(
        "rule value {value} at s={s} disagrees with the declared thresholds ({expected:?} band)"
    )]
    RuleBand {
        s: u32,
        value: f64,
        expected: PositivityBand,
    },
    #[error("conformist rule must be nondecreasing (violated at s={0})")]
    NotNondecreasing(u32),
    #[error("anti-conformist rule must be nonincreasing (violated at s={0})")]
    NotNonincreasing(u32),
    #[error("expected {expected} rule tables, got {got}")]
    RuleCount { expected: usize, got: usize },
    #[error("OWA weights must be nonnegative (w_{index} = {value})")]
    NegativeWeight { index: usize, value: f64 },
    #[error("OWA weights must sum to 1 (sum = {0})")]
    WeightSum(f64),
    #[error("OWA weights only correspond to conformist rules (rule is {0:?})")]
    ClassMismatch(AgentKind),
}

/// Mask with the lowest `k` bits set; `k` may be up to 64.
pub fn low_mask(k: u32) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

/// Group sizes partitioning the society, `n = n_c + n_a + n_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SocietyComposition {
    pub n: u32,
    pub n_c: u32,
    pub n_a: u32,
    pub n_m: u32,
}

impl SocietyComposition {
    pub fn new(n_c: u32, n_a: u32, n_m: u32) -> Result<Self, ConstraintViolation> {
        let n = n_c + n_a + n_m;
        if n == 0 {
            return Err(ConstraintViolation::EmptySociety);
        }
        Ok(Self { n, n_c, n_a, n_m })
    }

    pub fn conformist_mask(&self) -> u64 {
        low_mask(self.n_c)
    }

    pub fn anti_conformist_mask(&self) -> u64 {
        low_mask(self.n_a) << self.n_c
    }

    pub fn mixed_mask(&self) -> u64 {
        low_mask(self.n_m) << (self.n_c + self.n_a)
    }

    pub fn full_mask(&self) -> u64 {
        low_mask(self.n)
    }

    pub fn group_mask(&self, kind: AgentKind) -> u64 {
        match kind {
            AgentKind::Conformist => self.conformist_mask(),
            AgentKind::AntiConformist => self.anti_conformist_mask(),
            AgentKind::Mixed => self.mixed_mask(),
        }
    }

    pub fn group_size(&self, kind: AgentKind) -> u32 {
        match kind {
            AgentKind::Conformist => self.n_c,
            AgentKind::AntiConformist => self.n_a,
            AgentKind::Mixed => self.n_m,
        }
    }

    pub fn kind_of(&self, agent: u32) -> AgentKind {
        debug_assert!(agent < self.n);
        if agent < self.n_c {
            AgentKind::Conformist
        } else if agent < self.n_c + self.n_a {
            AgentKind::AntiConformist
        } else {
            AgentKind::Mixed
        }
    }

    /// The three groups in layout order with their sizes (including empty ones).
    pub fn groups(&self) -> [(AgentKind, u32); 3] {
        [
            (AgentKind::Conformist, self.n_c),
            (AgentKind::AntiConformist, self.n_a),
            (AgentKind::Mixed, self.n_m),
        ]
    }

    pub fn is_pure(&self) -> bool {
        self.n_m == 0
    }
}

/// The firing/saturation thresholds `(l_c, r_c, l_a, r_a)`.
///
/// `l` is the largest count of `yes` with no effect on the group's rule;
/// `n - r` is where the rule saturates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InfluenceabilityParams {
    pub l_c: u32,
    pub r_c: u32,
    pub l_a: u32,
    pub r_a: u32,
}

impl InfluenceabilityParams {
    pub fn new(l_c: u32, r_c: u32, l_a: u32, r_a: u32) -> Self {
        Self { l_c, r_c, l_a, r_a }
    }
}

/// Check the threshold constraints for a composition.
///
/// A group's thresholds are only constrained when agents using them exist:
/// conformist thresholds bind when `n_c > 0` or `n_m > 0`, anti-conformist
/// thresholds when `n_a > 0` or `n_m > 0`.
pub fn validate(
    comp: &SocietyComposition,
    z: &InfluenceabilityParams,
) -> Result<(), ConstraintViolation> {
    if comp.n == 0 {
        return Err(ConstraintViolation::EmptySociety);
    }
    if comp.n != comp.n_c + comp.n_a + comp.n_m {
        return Err(ConstraintViolation::CompositionSum {
            n: comp.n,
            sum: comp.n_c + comp.n_a + comp.n_m,
        });
    }
    if (comp.n_c > 0 || comp.n_m > 0) && z.l_c + z.r_c >= comp.n {
        return Err(ConstraintViolation::ConformistThresholds {
            l_c: z.l_c,
            r_c: z.r_c,
            n: comp.n,
        });
    }
    if (comp.n_a > 0 || comp.n_m > 0) && z.l_a + z.r_a >= comp.n {
        return Err(ConstraintViolation::AntiConformistThresholds {
            l_a: z.l_a,
            r_a: z.r_a,
            n: comp.n,
        });
    }
    Ok(())
}

/// Whether a rule value is pinned to 0, pinned to 1, or strictly inside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositivityBand {
    Zero,
    Interior,
    One,
}

/// The band of `p(s)` for an agent of the given kind.
///
/// Only the thresholds decide this, never a concrete rule table, so 0/1
/// values are exact by construction.
pub fn positivity(kind: AgentKind, z: &InfluenceabilityParams, s: u32, n: u32) -> PositivityBand {
    assert!(s <= n, "cardinality s={s} out of range 0..={n}");
    let (s, n) = (s as i64, n as i64);
    let (l_c, r_c, l_a, r_a) = (z.l_c as i64, z.r_c as i64, z.l_a as i64, z.r_a as i64);
    match kind {
        AgentKind::Conformist => {
            if s <= l_c {
                PositivityBand::Zero
            } else if s >= n - r_c {
                PositivityBand::One
            } else {
                PositivityBand::Interior
            }
        }
        AgentKind::AntiConformist => {
            if s <= l_a {
                PositivityBand::One
            } else if s >= n - r_a {
                PositivityBand::Zero
            } else {
                PositivityBand::Interior
            }
        }
        AgentKind::Mixed => {
            if n - r_a <= s && s <= l_c {
                PositivityBand::Zero
            } else if n - r_c <= s && s <= l_a {
                PositivityBand::One
            } else {
                PositivityBand::Interior
            }
        }
    }
}

/// An agent together with its mixing coefficient when mixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub kind: AgentKind,
    pub alpha: Option<f64>,
}

impl AgentProfile {
    pub fn new(kind: AgentKind, alpha: Option<f64>) -> Result<Self, ConstraintViolation> {
        match (kind, alpha) {
            (AgentKind::Mixed, None) => Err(ConstraintViolation::MissingAlpha),
            (AgentKind::Mixed, Some(a)) if !(a > 0.0 && a < 1.0) => {
                Err(ConstraintViolation::AlphaRange(a))
            }
            (AgentKind::Mixed, Some(_)) => Ok(Self { kind, alpha }),
            (_, Some(_)) => Err(ConstraintViolation::UnexpectedAlpha),
            (_, None) => Ok(Self { kind, alpha: None }),
        }
    }
}

/// An anonymous aggregation rule: `values[s]` is the probability of saying
/// `yes` next step when `s` agents say `yes` now.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationRule {
    kind: AgentKind,
    values: Vec<f64>,
}

fn conformist_ramp_value(z: &InfluenceabilityParams, s: u32, n: u32) -> f64 {
    match positivity(AgentKind::Conformist, z, s, n) {
        PositivityBand::Zero => 0.0,
        PositivityBand::One => 1.0,
        PositivityBand::Interior => (s - z.l_c) as f64 / (n - z.r_c - z.l_c) as f64,
    }
}

fn anti_conformist_ramp_value(z: &InfluenceabilityParams, s: u32, n: u32) -> f64 {
    match positivity(AgentKind::AntiConformist, z, s, n) {
        PositivityBand::One => 1.0,
        PositivityBand::Zero => 0.0,
        PositivityBand::Interior => (n - z.r_a - s) as f64 / (n - z.r_a - z.l_a) as f64,
    }
}

impl AggregationRule {
    /// The canonical piecewise-linear rule for the given kind and thresholds.
    ///
    /// The rule is 0 and 1 exactly where the thresholds demand it and linear
    /// in between; `alpha` must be present iff `kind` is mixed.
    pub fn ramp(
        kind: AgentKind,
        z: &InfluenceabilityParams,
        n: u32,
        alpha: Option<f64>,
    ) -> Result<Self, ConstraintViolation> {
        let profile = AgentProfile::new(kind, alpha)?;
        let values = (0..=n)
            .map(|s| match kind {
                AgentKind::Conformist => conformist_ramp_value(z, s, n),
                AgentKind::AntiConformist => anti_conformist_ramp_value(z, s, n),
                AgentKind::Mixed => {
                    let a = profile.alpha.expect("checked by AgentProfile::new");
                    match positivity(AgentKind::Mixed, z, s, n) {
                        PositivityBand::Zero => 0.0,
                        PositivityBand::One => 1.0,
                        PositivityBand::Interior => {
                            a * conformist_ramp_value(z, s, n)
                                + (1.0 - a) * anti_conformist_ramp_value(z, s, n)
                        }
                    }
                }
            })
            .collect();
        Ok(Self { kind, values })
    }

    /// Wrap an explicit table, checking class shape and band agreement with
    /// the declared thresholds. Table entries must hit 0 and 1 exactly where
    /// the thresholds require it.
    pub fn from_table(
        kind: AgentKind,
        z: &InfluenceabilityParams,
        n: u32,
        values: Vec<f64>,
    ) -> Result<Self, ConstraintViolation> {
        if values.len() != n as usize + 1 {
            return Err(ConstraintViolation::RuleLength {
                expected: n as usize + 1,
                got: values.len(),
            });
        }
        for (s, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) || v.is_nan() {
                return Err(ConstraintViolation::RuleRange {
                    s: s as u32,
                    value: v,
                });
            }
            let band = positivity(kind, z, s as u32, n);
            let ok = match band {
                PositivityBand::Zero => v == 0.0,
                PositivityBand::One => v == 1.0,
                PositivityBand::Interior => v > 0.0 && v < 1.0,
            };
            if !ok {
                return Err(ConstraintViolation::RuleBand {
                    s: s as u32,
                    value: v,
                    expected: band,
                });
            }
        }
        match kind {
            AgentKind::Conformist => {
                for s in 1..values.len() {
                    if values[s] < values[s - 1] {
                        return Err(ConstraintViolation::NotNondecreasing(s as u32));
                    }
                }
            }
            AgentKind::AntiConformist => {
                for s in 1..values.len() {
                    if values[s] > values[s - 1] {
                        return Err(ConstraintViolation::NotNonincreasing(s as u32));
                    }
                }
            }
            AgentKind::Mixed => {}
        }
        Ok(Self { kind, values })
    }

    pub fn kind(&self) -> AgentKind {
        self.kind
    }

    pub fn n(&self) -> u32 {
        self.values.len() as u32 - 1
    }

    pub fn value(&self, s: u32) -> f64 {
        self.values[s as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// A positional weight vector: `w[j]` weighs the `j+1`-th largest opinion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OwaWeights {
    w: Vec<f64>,
}

const WEIGHT_SUM_TOL: f64 = 1e-9;

impl OwaWeights {
    pub fn new(w: Vec<f64>) -> Result<Self, ConstraintViolation> {
        for (index, &value) in w.iter().enumerate() {
            if value < 0.0 || value.is_nan() {
                return Err(ConstraintViolation::NegativeWeight { index, value });
            }
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(ConstraintViolation::WeightSum(sum));
        }
        Ok(Self { w })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn n(&self) -> u32 {
        self.w.len() as u32
    }
}

/// The conformist rule with `p(s)` = sum of the first `s` weights.
pub fn rule_from_owa(weights: &OwaWeights) -> AggregationRule {
    let mut values = Vec::with_capacity(weights.w.len() + 1);
    let mut acc = 0.0;
    values.push(0.0);
    for &w in &weights.w {
        acc += w;
        values.push(acc);
    }
    // Prefix summation can round the final entry slightly off 1.
    let last = values.last_mut().expect("nonempty");
    *last = 1.0;
    AggregationRule {
        kind: AgentKind::Conformist,
        values,
    }
}

/// Recover weights as successive differences `w_j = p(j) - p(j-1)`.
pub fn owa_from_rule(rule: &AggregationRule) -> Result<OwaWeights, ConstraintViolation> {
    if rule.kind != AgentKind::Conformist {
        return Err(ConstraintViolation::ClassMismatch(rule.kind));
    }
    let w = rule
        .values
        .windows(2)
        .map(|pair| pair[1] - pair[0])
        .collect();
    OwaWeights::new(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(l_c: u32, r_c: u32, l_a: u32, r_a: u32) -> InfluenceabilityParams {
        InfluenceabilityParams::new(l_c, r_c, l_a, r_a)
    }

    #[test]
    fn validate_accepts_strict_inequalities() {
        let comp = SocietyComposition::new(5, 5, 0).unwrap();
        assert!(validate(&comp, &z(2, 3, 2, 2)).is_ok());
    }

    #[test]
    fn validate_rejects_boundary_sum() {
        let comp = SocietyComposition::new(5, 5, 0).unwrap();
        assert_eq!(
            validate(&comp, &z(5, 5, 0, 0)),
            Err(ConstraintViolation::ConformistThresholds {
                l_c: 5,
                r_c: 5,
                n: 10
            })
        );
    }

    #[test]
    fn validate_accepts_all_zero_thresholds() {
        let comp = SocietyComposition::new(2, 1, 0).unwrap();
        assert!(validate(&comp, &z(0, 0, 0, 0)).is_ok());
    }

    #[test]
    fn unused_group_thresholds_are_unconstrained() {
        // All-conformist society: the anti-conformist thresholds never bind.
        let comp = SocietyComposition::new(4, 0, 0).unwrap();
        assert!(validate(&comp, &z(1, 1, 9, 9)).is_ok());
        assert_eq!(
            validate(&comp, &z(4, 0, 9, 9)),
            Err(ConstraintViolation::ConformistThresholds {
                l_c: 4,
                r_c: 0,
                n: 4
            })
        );
    }

    #[test]
    fn conformist_ramp_matches_thresholds() {
        let rule = AggregationRule::ramp(AgentKind::Conformist, &z(2, 3, 0, 0), 10, None).unwrap();
        assert_eq!(rule.value(2), 0.0);
        assert_eq!(rule.value(7), 1.0);
        assert_eq!(rule.value(5), 0.6);
        assert_eq!(rule.value(0), 0.0);
        assert_eq!(rule.value(10), 1.0);
    }

    #[test]
    fn mixed_ramp_endpoints_are_interior() {
        // Mixing the two ramps with alpha = 1/2 leaves both endpoints at 1/2.
        let zz = z(2, 3, 1, 0);
        let rule = AggregationRule::ramp(AgentKind::Mixed, &zz, 10, Some(0.5)).unwrap();
        assert_eq!(rule.value(0), 0.5);
        assert_eq!(rule.value(10), 0.5);
        assert!(rule.value(0) > 0.0 && rule.value(10) < 1.0);
    }

    #[test]
    fn ramp_requires_alpha_exactly_for_mixed() {
        let zz = z(1, 1, 1, 1);
        assert_eq!(
            AggregationRule::ramp(AgentKind::Mixed, &zz, 5, None),
            Err(ConstraintViolation::MissingAlpha)
        );
        assert_eq!(
            AggregationRule::ramp(AgentKind::Conformist, &zz, 5, Some(0.5)),
            Err(ConstraintViolation::UnexpectedAlpha)
        );
        assert_eq!(
            AggregationRule::ramp(AgentKind::Mixed, &zz, 5, Some(1.0)),
            Err(ConstraintViolation::AlphaRange(1.0))
        );
    }

    #[test]
    fn positivity_boundaries() {
        let zz = z(2, 3, 1, 2);
        assert_eq!(
            positivity(AgentKind::Conformist, &zz, 0, 10),
            PositivityBand::Zero
        );
        assert_eq!(
            positivity(AgentKind::AntiConformist, &zz, 0, 10),
            PositivityBand::One
        );
        assert_eq!(
            positivity(AgentKind::Conformist, &zz, 3, 10),
            PositivityBand::Interior
        );
        assert_eq!(
            positivity(AgentKind::Conformist, &zz, 10, 10),
            PositivityBand::One
        );
        assert_eq!(
            positivity(AgentKind::AntiConformist, &zz, 10, 10),
            PositivityBand::Zero
        );
    }

    #[test]
    fn positivity_mixed_zero_window() {
        // With r_a = 8 and l_c = 3 at n = 10, mixed rules vanish on 2..=3.
        let zz = z(3, 1, 1, 8);
        assert_eq!(
            positivity(AgentKind::Mixed, &zz, 2, 10),
            PositivityBand::Zero
        );
        assert_eq!(
            positivity(AgentKind::Mixed, &zz, 3, 10),
            PositivityBand::Zero
        );
        assert_eq!(
            positivity(AgentKind::Mixed, &zz, 1, 10),
            PositivityBand::Interior
        );
        assert_eq!(
            positivity(AgentKind::Mixed, &zz, 4, 10),
            PositivityBand::Interior
        );
        assert_eq!(
            positivity(AgentKind::Mixed, &zz, 0, 10),
            PositivityBand::Interior
        );
    }

    #[test]
    fn band_and_ramp_agree_for_all_kinds() {
        for n in 1..=12u32 {
            for l_c in 0..n {
                for r_c in 0..n - l_c {
                    for l_a in 0..n {
                        for r_a in 0..n - l_a {
                            let zz = z(l_c, r_c, l_a, r_a);
                            for (kind, alpha) in [
                                (AgentKind::Conformist, None),
                                (AgentKind::AntiConformist, None),
                                (AgentKind::Mixed, Some(0.37)),
                            ] {
                                let rule = AggregationRule::ramp(kind, &zz, n, alpha).unwrap();
                                for s in 0..=n {
                                    let band = positivity(kind, &zz, s, n);
                                    let v = rule.value(s);
                                    match band {
                                        PositivityBand::Zero => assert_eq!(v, 0.0),
                                        PositivityBand::One => assert_eq!(v, 1.0),
                                        PositivityBand::Interior => {
                                            assert!(v > 0.0 && v < 1.0, "kind {kind:?} s {s} v {v}")
                                        }
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
    fn ramp_monotonicity() {
        let zz = z(2, 3, 1, 2);
        let conf = AggregationRule::ramp(AgentKind::Conformist, &zz, 10, None).unwrap();
        let anti = AggregationRule::ramp(AgentKind::AntiConformist, &zz, 10, None).unwrap();
        for s in 1..=10 {
            assert!(conf.value(s) >= conf.value(s - 1));
            assert!(anti.value(s) <= anti.value(s - 1));
        }
    }

    #[test]
    fn owa_there_exists_and_for_all() {
        let exists = OwaWeights::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let rule = rule_from_owa(&exists);
        assert_eq!(rule.value(0), 0.0);
        for s in 1..=4 {
            assert_eq!(rule.value(s), 1.0);
        }

        let for_all = OwaWeights::new(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let rule = rule_from_owa(&for_all);
        for s in 0..4 {
            assert_eq!(rule.value(s), 0.0);
        }
        assert_eq!(rule.value(4), 1.0);
    }

    #[test]
    fn owa_of_ramp_is_uniform_over_the_slope() {
        let rule = AggregationRule::ramp(AgentKind::Conformist, &z(2, 3, 0, 0), 10, None).unwrap();
        let w = owa_from_rule(&rule).unwrap();
        let expected = [0.0, 0.0, 0.2, 0.2, 0.2, 0.2, 0.2, 0.0, 0.0, 0.0];
        for (j, (&got, &want)) in w.as_slice().iter().zip(expected.iter()).enumerate() {
            assert!(
                (got - want).abs() < 1e-12,
                "w_{} = {got}, want {want}",
                j + 1
            );
        }
    }

    #[test]
    fn owa_round_trip() {
        let w = OwaWeights::new(vec![0.1, 0.0, 0.25, 0.3, 0.05, 0.3]).unwrap();
        let back = owa_from_rule(&rule_from_owa(&w)).unwrap();
        for (a, b) in w.as_slice().iter().zip(back.as_slice()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn owa_rejects_non_conformist() {
        let rule =
            AggregationRule::ramp(AgentKind::AntiConformist, &z(0, 0, 1, 2), 5, None).unwrap();
        assert_eq!(
            owa_from_rule(&rule),
            Err(ConstraintViolation::ClassMismatch(
                AgentKind::AntiConformist
            ))
        );
    }

    #[test]
    fn explicit_table_band_check() {
        let zz = z(1, 1, 0, 0);
        let ok = AggregationRule::from_table(
            AgentKind::Conformist,
            &zz,
            4,
            vec![0.0, 0.0, 0.4, 1.0, 1.0],
        );
        assert!(ok.is_ok());
        let bad = AggregationRule::from_table(
            AgentKind::Conformist,
            &zz,
            4,
            vec![0.0, 0.1, 0.4, 1.0, 1.0],
        );
        assert!(matches!(
            bad,
            Err(ConstraintViolation::RuleBand { s: 1, .. })
        ));
    }
}
