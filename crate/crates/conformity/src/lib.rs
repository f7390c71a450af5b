//! Engine for anonymous yes/no opinion dynamics with conformist,
//! anti-conformist, and mixed agents: exact Markov-chain analysis of
//! absorbing classes, a closed-form classifier, a brute-force
//! cross-validation harness, a Monte-Carlo simulator, and a large-population
//! phase-diagram generator.

pub mod chain;
pub mod classify;
pub mod counts;
pub mod model;
pub mod phase;
pub mod scenario;
pub mod simulate;
pub mod stats;
pub mod transitions;
pub mod verify;

pub use model::{
    AgentKind, AggregationRule, ConstraintViolation, InfluenceabilityParams, PositivityBand,
    SocietyComposition,
};
pub use scenario::{Model, Scenario};
