//! Scenario file schema and the fully-resolved model built from it.
//!
//! Agent indices follow the fixed layout `[conformists | anti-conformists |
//! mixed]`; the optional `rules` tables and `alphas` list use that order.

use serde::{Deserialize, Serialize};

use crate::model::{
    validate, AgentKind, AgentProfile, AggregationRule, ConstraintViolation,
    InfluenceabilityParams, SocietyComposition,
};

/// Wire format of a scenario file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub n: u32,
    pub n_c: u32,
    pub n_a: u32,
    pub n_m: u32,
    pub l_c: u32,
    pub r_c: u32,
    pub l_a: u32,
    pub r_a: u32,
    /// Mixing coefficients for the mixed agents, in layout order. Defaults
    /// to 1/2 for every mixed agent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    /// Optional explicit rule tables (one per agent, each of length n + 1),
    /// in layout order. Defaults to the canonical piecewise-linear rules.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules: Option<Vec<Vec<f64>>>,
}

impl Scenario {
    pub fn new(comp: &SocietyComposition, z: &InfluenceabilityParams) -> Self {
        Self {
            n: comp.n,
            n_c: comp.n_c,
            n_a: comp.n_a,
            n_m: comp.n_m,
            l_c: z.l_c,
            r_c: z.r_c,
            l_a: z.l_a,
            r_a: z.r_a,
            alphas: None,
            rules: None,
        }
    }

    pub fn composition(&self) -> Result<SocietyComposition, ConstraintViolation> {
        let comp = SocietyComposition::new(self.n_c, self.n_a, self.n_m)?;
        if comp.n != self.n {
            return Err(ConstraintViolation::CompositionSum {
                n: self.n,
                sum: comp.n,
            });
        }
        Ok(comp)
    }

    pub fn params(&self) -> InfluenceabilityParams {
        InfluenceabilityParams::new(self.l_c, self.r_c, self.l_a, self.r_a)
    }

    /// Validate everything and resolve per-agent profiles and rules.
    pub fn build(&self) -> Result<Model, ConstraintViolation> {
        let comp = self.composition()?;
        let z = self.params();
        validate(&comp, &z)?;

        let alphas: Vec<f64> = match &self.alphas {
            Some(a) => {
                if a.len() != comp.n_m as usize {
                    return Err(ConstraintViolation::AlphaCount {
                        expected: comp.n_m as usize,
                        got: a.len(),
                    });
                }
                a.clone()
            }
            None => vec![0.5; comp.n_m as usize],
        };

        let mut profiles = Vec::with_capacity(comp.n as usize);
        for i in 0..comp.n {
            let kind = comp.kind_of(i);
            let alpha = match kind {
                AgentKind::Mixed => Some(alphas[(i - comp.n_c - comp.n_a) as usize]),
                _ => None,
            };
            profiles.push(AgentProfile::new(kind, alpha)?);
        }

        let rules = match &self.rules {
            Some(tables) => {
                if tables.len() != comp.n as usize {
                    return Err(ConstraintViolation::RuleCount {
                        expected: comp.n as usize,
                        got: tables.len(),
                    });
                }
                profiles
                    .iter()
                    .zip(tables)
                    .map(|(profile, table)| {
                        AggregationRule::from_table(profile.kind, &z, comp.n, table.clone())
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
            None => profiles
                .iter()
                .map(|profile| AggregationRule::ramp(profile.kind, &z, comp.n, profile.alpha))
                .collect::<Result<Vec<_>, _>>()?,
        };

        Ok(Model {
            comp,
            z,
            profiles,
            rules,
            explicit_rules: self.rules.is_some(),
        })
    }
}

/// A validated scenario with per-agent profiles and concrete rules.
#[derive(Debug, Clone)]
pub struct Model {
    pub comp: SocietyComposition,
    pub z: InfluenceabilityParams,
    pub profiles: Vec<AgentProfile>,
    pub rules: Vec<AggregationRule>,
    /// Whether the rules came from explicit tables rather than the ramps.
    pub explicit_rules: bool,
}
