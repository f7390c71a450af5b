//! Large-population limit analysis: normalized parameters, reactiveness
//! reparameterization, region classification for three typical situations,
//! and grid sweeps emitted as CSV.
//!
//! Thresholds are fractions of the population here. A rule's reactiveness is
//! `gamma = 1/(1 - r - l)`, the average slope between the firing threshold
//! `l` and the saturation threshold `1 - r`. Region classification uses the
//! inequality conditions of the finite-population classifier with sizes
//! replaced by fractions; away from region boundaries this agrees with the
//! exact finite-population analysis (tolerance one part in the population).

use std::fmt;
use std::io::{self, Write};

use serde::Serialize;

use crate::classify::CanonicalId;

/// One component of a region label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelPart {
    PolarizationNa,
    PolarizationNc,
    FuzzyPolarization,
    Cycle,
    FuzzyCycle,
    ConsensusNo,
    ConsensusYes,
    AlmostConsensusNo,
    AlmostConsensusYes,
    ChaoticPolarizationNo,
    ChaoticPolarizationYes,
    Chaos,
    Invalid,
}

/// A region label: one part normally, several where regions overlap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegionLabel {
    parts: Vec<LabelPart>,
}

impl RegionLabel {
    fn new(mut parts: Vec<LabelPart>) -> Self {
        parts.sort_unstable();
        parts.dedup();
        assert!(!parts.is_empty());
        Self { parts }
    }

    pub fn parts(&self) -> &[LabelPart] {
        &self.parts
    }

    pub fn is(&self, part: LabelPart) -> bool {
        self.parts == [part]
    }

    pub fn contains(&self, part: LabelPart) -> bool {
        self.parts.contains(&part)
    }
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use LabelPart::*;
        let mut words: Vec<&str> = Vec::new();
        let mut parts = self.parts.clone();
        for (pair, merged) in [
            ([PolarizationNa, PolarizationNc], "polarization_both"),
            ([ConsensusNo, ConsensusYes], "consensus_both"),
        ] {
            if pair.iter().all(|p| parts.contains(p)) {
                parts.retain(|p| !pair.contains(p));
                words.push(merged);
            }
        }
        for part in parts {
            words.push(match part {
                PolarizationNa => "polarization_na",
                PolarizationNc => "polarization_nc",
                FuzzyPolarization => "fuzzy_polarization",
                Cycle => "cycle",
                FuzzyCycle => "fuzzy_cycle",
                ConsensusNo => "consensus_no",
                ConsensusYes => "consensus_yes",
                AlmostConsensusNo => "almost_consensus_no",
                AlmostConsensusYes => "almost_consensus_yes",
                ChaoticPolarizationNo => "chaotic_polarization_no",
                ChaoticPolarizationYes => "chaotic_polarization_yes",
                Chaos => "chaos",
                Invalid => "invalid",
            });
        }
        words.sort_unstable();
        write!(f, "{}", words.join("+"))
    }
}

/// Classification of one parameter point.
#[derive(Debug, Clone, Serialize)]
pub struct RegionOutcome {
    pub label: RegionLabel,
    pub fired: Vec<CanonicalId>,
    /// Exactly on a defining inequality of the region geometry.
    pub boundary: bool,
}

/// Comparison helpers that remember whether any comparison was tight.
struct Edge {
    boundary: bool,
}

impl Edge {
    fn new() -> Self {
        Self { boundary: false }
    }

    fn le(&mut self, a: f64, b: f64) -> bool {
        if a == b {
            self.boundary = true;
        }
        a <= b
    }

    fn ge(&mut self, a: f64, b: f64) -> bool {
        self.le(b, a)
    }

    fn lt(&mut self, a: f64, b: f64) -> bool {
        if a == b {
            self.boundary = true;
        }
        a < b
    }

    fn gt(&mut self, a: f64, b: f64) -> bool {
        self.lt(b, a)
    }
}

fn invalid() -> RegionOutcome {
    RegionOutcome {
        label: RegionLabel::new(vec![LabelPart::Invalid]),
        fired: vec![],
        boundary: false,
    }
}

fn population_edge(n_a: f64) -> Option<RegionOutcome> {
    // The model is discontinuous at the all-conformist and
    // all-anti-conformist edges; report the single-group limits there.
    if n_a == 0.0 {
        Some(RegionOutcome {
            label: RegionLabel::new(vec![LabelPart::ConsensusNo, LabelPart::ConsensusYes]),
            fired: vec![],
            boundary: true,
        })
    } else if n_a == 1.0 {
        Some(RegionOutcome {
            label: RegionLabel::new(vec![LabelPart::Cycle]),
            fired: vec![],
            boundary: true,
        })
    } else {
        None
    }
}

/// Situation where both groups share the same thresholds `l` and the same
/// reactiveness `gamma` (`gamma` may be infinite, meaning `r = 1 - l`).
pub fn classify_situation1(n_a: f64, l: f64, gamma: f64) -> RegionOutcome {
    let inv_gamma = if gamma.is_infinite() {
        0.0
    } else {
        1.0 / gamma
    };
    let r = 1.0 - l - inv_gamma;
    if !(0.0..=1.0).contains(&n_a) || !(0.0..=1.0).contains(&l) || r < 0.0 {
        return invalid();
    }
    if let Some(edge) = population_edge(n_a) {
        return edge;
    }
    let mut e = Edge::new();
    let na_class = e.le(n_a, l);
    let nc_class = e.le(n_a, 1.0 - l - inv_gamma);
    let cycle = e.ge(n_a, 1.0 - l) && e.ge(n_a, inv_gamma + l);
    let mut parts = Vec::new();
    let mut fired = Vec::new();
    if na_class {
        parts.push(LabelPart::PolarizationNa);
        fired.push(CanonicalId::Pure(1));
    }
    if nc_class {
        parts.push(LabelPart::PolarizationNc);
        fired.push(CanonicalId::Pure(2));
    }
    if cycle {
        parts.push(LabelPart::Cycle);
        fired.push(CanonicalId::Pure(5));
    }
    if parts.is_empty() {
        parts.push(LabelPart::Chaos);
        fired.push(CanonicalId::Pure(20));
    }
    RegionOutcome {
        label: RegionLabel::new(parts),
        fired,
        boundary: e.boundary,
    }
}

/// Situation with yes/no symmetric thresholds: `r_a = l_a` and `r_c = l_c`,
/// both below one half.
pub fn classify_situation2(n_a: f64, l_a: f64, l_c: f64) -> RegionOutcome {
    if !(0.0..=1.0).contains(&n_a) || !(0.0..0.5).contains(&l_a) || !(0.0..0.5).contains(&l_c) {
        return invalid();
    }
    if let Some(edge) = population_edge(n_a) {
        return edge;
    }
    let mut e = Edge::new();
    let polarization = e.le(n_a, l_a) && e.le(n_a, l_c);
    let cycle = e.ge(n_a, 1.0 - l_a) && e.ge(n_a, 1.0 - l_c);
    let fuzzy_cycle = e.ge(n_a, 1.0 - l_a) && e.gt(n_a, l_c) && e.lt(n_a, 1.0 - l_c);
    let fuzzy_polarization = e.le(n_a, l_c) && e.gt(n_a, l_a) && e.lt(n_a, 1.0 - l_a);
    let mut parts = Vec::new();
    let mut fired = Vec::new();
    if polarization {
        parts.extend([LabelPart::PolarizationNa, LabelPart::PolarizationNc]);
        fired.extend([CanonicalId::Pure(1), CanonicalId::Pure(2)]);
    }
    if cycle {
        parts.push(LabelPart::Cycle);
        fired.push(CanonicalId::Pure(5));
    }
    if fuzzy_cycle {
        parts.push(LabelPart::FuzzyCycle);
        fired.push(CanonicalId::Pure(10));
    }
    if fuzzy_polarization {
        parts.push(LabelPart::FuzzyPolarization);
        fired.extend([CanonicalId::Pure(11), CanonicalId::Pure(12)]);
    }
    if parts.is_empty() {
        parts.push(LabelPart::Chaos);
        fired.push(CanonicalId::Pure(20));
    }
    RegionOutcome {
        label: RegionLabel::new(parts),
        fired,
        boundary: e.boundary,
    }
}

/// Situation where the anti-conformist fraction is a vanishing `epsilon`.
pub fn classify_situation3(epsilon: f64, l_c: f64, r_c: f64, l_a: f64, r_a: f64) -> RegionOutcome {
    let valid = epsilon > 0.0
        && epsilon < 1.0
        && l_c >= 0.0
        && r_c >= 0.0
        && l_a >= 0.0
        && r_a >= 0.0
        && l_c + r_c < 1.0
        && l_a + r_a < 1.0;
    if !valid {
        return invalid();
    }
    let mut e = Edge::new();
    let c1 = e.ge(l_c.min(l_a), epsilon);
    let c2 = e.ge(r_c.min(r_a), epsilon);
    let c3 = e.ge(l_c, epsilon) && e.ge(r_a, 1.0 - epsilon);
    let c4 = e.ge(r_c, epsilon) && e.ge(l_a, 1.0 - epsilon);
    let c11 = e.lt(l_a, epsilon) && e.ge(l_c, epsilon) && e.lt(r_a, 1.0 - epsilon);
    let c12 = e.lt(r_a, epsilon) && e.ge(r_c, epsilon) && e.lt(l_a, 1.0 - epsilon);
    let c13 = e.lt(l_c, epsilon) && e.lt(r_c, epsilon) && e.gt(r_a, 1.0 - epsilon);
    let c14 = e.lt(l_c, epsilon) && e.lt(r_c, epsilon) && e.gt(l_a, 1.0 - epsilon);
    let mut parts = Vec::new();
    let mut fired = Vec::new();
    if c1 {
        parts.push(LabelPart::ConsensusNo);
        fired.push(CanonicalId::Pure(1));
    }
    if c2 {
        parts.push(LabelPart::ConsensusYes);
        fired.push(CanonicalId::Pure(2));
    }
    if c3 || c11 {
        parts.push(LabelPart::AlmostConsensusNo);
        if c3 {
            fired.push(CanonicalId::Pure(3));
        }
        if c11 {
            fired.push(CanonicalId::Pure(11));
        }
    }
    if c4 || c12 {
        parts.push(LabelPart::AlmostConsensusYes);
        if c4 {
            fired.push(CanonicalId::Pure(4));
        }
        if c12 {
            fired.push(CanonicalId::Pure(12));
        }
    }
    if c13 {
        parts.push(LabelPart::ChaoticPolarizationNo);
        fired.push(CanonicalId::Pure(13));
    }
    if c14 {
        parts.push(LabelPart::ChaoticPolarizationYes);
        fired.push(CanonicalId::Pure(14));
    }
    if parts.is_empty() {
        parts.push(LabelPart::Chaos);
        fired.push(CanonicalId::Pure(20));
    }
    RegionOutcome {
        label: RegionLabel::new(parts),
        fired,
        boundary: e.boundary,
    }
}

/// Classes requiring `l + r` at its maximum only exist in the limit
/// `l + r -> 1`; near that limit (within `tol`) they are reported in the
/// fired-case trace without affecting labels. Only the limit equality is
/// relaxed; every other comparison keeps its exact strictness.
fn limit_case_trace(
    n_a: f64,
    l_c: f64,
    r_c: f64,
    l_a: f64,
    r_a: f64,
    tol: f64,
) -> Vec<CanonicalId> {
    let n_c = 1.0 - n_a;
    let mut out = Vec::new();
    let conf_limit = (l_c + r_c - 1.0).abs() <= tol;
    let anti_limit = (l_a + r_a - 1.0).abs() <= tol;
    if conf_limit && r_a >= r_c && l_c > l_a && l_a < n_c && n_c < (1.0 - r_a).min(1.0 - l_c) {
        out.push(CanonicalId::Pure(15));
    }
    if conf_limit && l_a >= l_c && r_c > r_a && r_a < n_c && n_c < (1.0 - l_a).min(1.0 - r_c) {
        out.push(CanonicalId::Pure(16));
    }
    if anti_limit
        && l_c >= l_a
        && n_c < 1.0 - r_c
        && ((r_c < n_c && n_c < 1.0 - l_c) || (l_c < n_c && n_c <= r_c))
    {
        out.push(CanonicalId::Pure(17));
    }
    if anti_limit
        && r_c >= r_a
        && n_c < 1.0 - l_c
        && ((l_c < n_c && n_c < 1.0 - r_c) || (r_c < n_c && n_c <= l_c))
    {
        out.push(CanonicalId::Pure(18));
    }
    if conf_limit && l_a.max(r_a) < n_c && n_c <= l_c.min(r_c) {
        out.push(CanonicalId::Pure(19));
    }
    out
}

/// A grid sweep specification: which situation, its fixed parameters, and
/// the two axes.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case", tag = "situation")]
pub enum SituationSpec {
    /// Axes: firing threshold `l` and anti-conformist fraction.
    One { gamma: f64 },
    /// Axes: reactiveness `gamma` (up to `gamma_max`) and fraction.
    OneByGamma { l: f64, gamma_max: f64 },
    /// Axes: anti-conformist threshold `l_a` and fraction.
    Two { l_c: f64 },
    /// Axes: `l_a` and `r_a` over the unit triangle.
    Three { epsilon: f64, l_c: f64, r_c: f64 },
}

impl SituationSpec {
    fn situation_number(&self) -> u8 {
        match self {
            SituationSpec::One { .. } | SituationSpec::OneByGamma { .. } => 1,
            SituationSpec::Two { .. } => 2,
            SituationSpec::Three { .. } => 3,
        }
    }

    fn axis_names(&self) -> (&'static str, &'static str) {
        match self {
            SituationSpec::One { .. } => ("l", "n_a"),
            SituationSpec::OneByGamma { .. } => ("gamma", "n_a"),
            SituationSpec::Two { .. } => ("l_a", "n_a"),
            SituationSpec::Three { .. } => ("l_a", "r_a"),
        }
    }

    fn axis_value(&self, axis: usize, fraction: f64) -> f64 {
        match (self, axis) {
            (SituationSpec::OneByGamma { gamma_max, .. }, 0) => 1.0 + fraction * (gamma_max - 1.0),
            (SituationSpec::Two { .. }, 0) => fraction * 0.5,
            _ => fraction,
        }
    }

    fn classify(&self, x: f64, y: f64) -> RegionOutcome {
        match *self {
            SituationSpec::One { gamma } => classify_situation1(y, x, gamma),
            SituationSpec::OneByGamma { l, .. } => classify_situation1(y, l, x),
            SituationSpec::Two { l_c } => classify_situation2(y, x, l_c),
            SituationSpec::Three { epsilon, l_c, r_c } => {
                classify_situation3(epsilon, l_c, r_c, x, y)
            }
        }
    }

    /// Normalized `(n_a, l_c, r_c, l_a, r_a)` at a grid point, for the
    /// limit-case trace.
    fn normalized(&self, x: f64, y: f64) -> Option<(f64, f64, f64, f64, f64)> {
        match *self {
            SituationSpec::One { gamma } => {
                let r = 1.0
                    - x
                    - if gamma.is_infinite() {
                        0.0
                    } else {
                        1.0 / gamma
                    };
                Some((y, x, r, x, r))
            }
            SituationSpec::OneByGamma { l, .. } => {
                let r = 1.0 - l - 1.0 / x;
                Some((y, l, r, l, r))
            }
            SituationSpec::Two { l_c } => Some((y, l_c, l_c, x, x)),
            SituationSpec::Three { epsilon, l_c, r_c } => Some((epsilon, l_c, r_c, x, y)),
        }
    }
}

/// Emit a dense grid as CSV with one row per point.
///
/// Schema: `situation,axis1_name,axis1,axis2_name,axis2,label,fired_cases,
/// boundary`, LF line endings, rows in axis1-major order.
pub fn sweep_grid<W: Write>(spec: &SituationSpec, resolution: u32, out: &mut W) -> io::Result<()> {
    assert!(resolution >= 2, "need at least two points per axis");
    let (axis1_name, axis2_name) = spec.axis_names();
    let situation = spec.situation_number();
    let tol = 1.0 / resolution as f64;
    writeln!(
        out,
        "situation,axis1_name,axis1,axis2_name,axis2,label,fired_cases,boundary"
    )?;
    for i in 0..resolution {
        let x = spec.axis_value(0, i as f64 / (resolution - 1) as f64);
        for j in 0..resolution {
            let y = spec.axis_value(1, j as f64 / (resolution - 1) as f64);
            let outcome = spec.classify(x, y);
            let mut fired = outcome.fired.clone();
            if !outcome.label.is(LabelPart::Invalid) {
                if let Some((n_a, l_c, r_c, l_a, r_a)) = spec.normalized(x, y) {
                    fired.extend(limit_case_trace(n_a, l_c, r_c, l_a, r_a, tol));
                }
            }
            fired.sort_unstable();
            fired.dedup();
            let fired: Vec<String> = fired.iter().map(|c| c.to_string()).collect();
            writeln!(
                out,
                "{situation},{axis1_name},{x},{axis2_name},{y},{label},{fired},{boundary}",
                label = outcome.label,
                fired = fired.join(";"),
                boundary = outcome.boundary
            )?;
        }
    }
    Ok(())
}
