//! Monte-Carlo trajectory sampling: per-agent mode for arbitrary
//! heterogeneous rules, and group-count mode that draws one binomial per
//! group (per mixing-coefficient class for mixed agents), exact because
//! updates are independent and anonymous.
//!
//! Reproducibility: every trajectory owns a counter-based RNG stream derived
//! from the run seed and the trajectory index, so parallel execution is
//! order-independent.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::classify::ResolvedClass;
use crate::counts::CountProfile;
use crate::model::{
    validate, AggregationRule, ConstraintViolation, InfluenceabilityParams, SocietyComposition,
};
use crate::scenario::Model;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Invalid(#[from] ConstraintViolation),
    #[error("group mode needs one rule table per group; agents within group {0} differ")]
    HeterogeneousRules(&'static str),
    #[error("initial state {0:#b} is outside the state space")]
    BadInitial(u64),
    #[error("agent mode supports at most 64 agents (n = {0})")]
    TooManyAgents(u32),
    #[error("trajectory left its absorbing class at step {step}; the provided classes are wrong")]
    LeftDetectedClass { step: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    Agents,
    Groups,
}

/// Per-group rule tables for count-level stepping. Mixed agents split into
/// classes of equal mixing coefficient, each with its own table.
#[derive(Debug, Clone)]
pub struct GroupRules {
    comp: SocietyComposition,
    conformist: Vec<f64>,
    anti: Vec<f64>,
    mixed: Vec<(Vec<f64>, u32)>,
}

impl GroupRules {
    /// Canonical piecewise-linear rules for every group.
    pub fn new(
        comp: &SocietyComposition,
        z: &InfluenceabilityParams,
        alphas: &[f64],
    ) -> Result<Self, SimError> {
        validate(comp, z)?;
        if alphas.len() != comp.n_m as usize {
            return Err(SimError::Invalid(ConstraintViolation::AlphaCount {
                expected: comp.n_m as usize,
                got: alphas.len(),
            }));
        }
        use crate::model::AgentKind::*;
        let conformist = if comp.n_c > 0 {
            AggregationRule::ramp(Conformist, z, comp.n, None)?
                .values()
                .to_vec()
        } else {
            Vec::new()
        };
        let anti = if comp.n_a > 0 {
            AggregationRule::ramp(AntiConformist, z, comp.n, None)?
                .values()
                .to_vec()
        } else {
            Vec::new()
        };
        let mut mixed: Vec<(Vec<f64>, u32)> = Vec::new();
        let mut classes: BTreeMap<u64, u32> = BTreeMap::new();
        for &alpha in alphas {
            *classes.entry(alpha.to_bits()).or_insert(0) += 1;
        }
        for (&bits, &count) in &classes {
            let alpha = f64::from_bits(bits);
            let rule = AggregationRule::ramp(Mixed, z, comp.n, Some(alpha))?;
            mixed.push((rule.values().to_vec(), count));
        }
        Ok(Self {
            comp: *comp,
            conformist,
            anti,
            mixed,
        })
    }

    /// Group tables from a resolved model; the tables must be uniform within
    /// each group (mixed agents may differ only by mixing coefficient).
    pub fn from_model(model: &Model) -> Result<Self, SimError> {
        let comp = model.comp;
        let group = |lo: u32, hi: u32, name: &'static str| -> Result<Vec<f64>, SimError> {
            if lo == hi {
                return Ok(Vec::new());
            }
            let first = model.rules[lo as usize].values();
            for i in lo + 1..hi {
                if model.rules[i as usize].values() != first {
                    return Err(SimError::HeterogeneousRules(name));
                }
            }
            Ok(first.to_vec())
        };
        let conformist = group(0, comp.n_c, "conformist")?;
        let anti = group(comp.n_c, comp.n_c + comp.n_a, "anti-conformist")?;
        let mut mixed: Vec<(Vec<f64>, u32)> = Vec::new();
        for i in comp.n_c + comp.n_a..comp.n {
            let values = model.rules[i as usize].values();
            match mixed.iter_mut().find(|(v, _)| v == values) {
                Some((_, count)) => *count += 1,
                None => mixed.push((values.to_vec(), 1)),
            }
        }
        Ok(Self {
            comp,
            conformist,
            anti,
            mixed,
        })
    }

    pub fn composition(&self) -> &SocietyComposition {
        &self.comp
    }
}

fn draw_binomial<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("0 < p < 1").sample(rng)
    }
}

/// One synchronous update with independent per-agent draws.
pub fn step_agents<R: Rng>(state: u64, rules: &[AggregationRule], rng: &mut R) -> u64 {
    let n = rules.len() as u32;
    let s = (state & crate::model::low_mask(n)).count_ones();
    let mut next = 0u64;
    for (i, rule) in rules.iter().enumerate() {
        let p = rule.value(s);
        if rng.random::<f64>() < p {
            next |= 1 << i;
        }
    }
    next
}

/// One synchronous update at group-count level: one binomial draw per group
/// (per mixing class for mixed agents).
pub fn step_groups<R: Rng>(g: CountProfile, rules: &GroupRules, rng: &mut R) -> CountProfile {
    let s = g.total() as usize;
    let comp = &rules.comp;
    let k_c = if comp.n_c > 0 {
        draw_binomial(rng, comp.n_c as u64, rules.conformist[s]) as u32
    } else {
        0
    };
    let k_a = if comp.n_a > 0 {
        draw_binomial(rng, comp.n_a as u64, rules.anti[s]) as u32
    } else {
        0
    };
    let mut k_m = 0u32;
    for (values, count) in &rules.mixed {
        k_m += draw_binomial(rng, *count as u64, values[s]) as u32;
    }
    CountProfile::new(k_c, k_a, k_m)
}

/// Count-profile membership test for classes whose parts are unions of
/// whole-group intervals (true for every canonical form).
fn class_contains_profile(
    class: &ResolvedClass,
    comp: &SocietyComposition,
    p: CountProfile,
) -> bool {
    class.parts.iter().any(|&(lo, hi)| {
        let lo = profile_of(lo, comp);
        let hi = profile_of(hi, comp);
        lo.k_c <= p.k_c
            && p.k_c <= hi.k_c
            && lo.k_a <= p.k_a
            && p.k_a <= hi.k_a
            && lo.k_m <= p.k_m
            && p.k_m <= hi.k_m
    })
}

fn profile_of(mask: u64, comp: &SocietyComposition) -> CountProfile {
    CountProfile::new(
        (mask & comp.conformist_mask()).count_ones(),
        (mask & comp.anti_conformist_mask()).count_ones(),
        (mask & comp.mixed_mask()).count_ones(),
    )
}

/// Statistics of one trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryStats {
    pub steps: u64,
    /// Index into the supplied class list, once entered.
    pub detected_class: Option<usize>,
    pub hitting_time: Option<u64>,
    /// Post-entry visit counts per state, sorted by state (agent mode).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub occupancy_states: Vec<(u64, u64)>,
    /// Post-entry visit counts per group-count profile (group mode).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub occupancy_groups: Vec<(CountProfile, u64)>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SimConfig {
    pub steps: u64,
    pub mode: SimMode,
    pub seed: u64,
    /// Stop a trajectory as soon as it enters a known class (skips the
    /// post-entry occupancy record).
    pub halt_on_detection: bool,
}

fn trajectory_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Run one trajectory on its own RNG stream, detecting entry into any of the
/// known classes and checking online that the trajectory never leaves a
/// class it entered.
pub fn run_trajectory(
    model: &Model,
    initial: u64,
    config: &SimConfig,
    stream: u64,
    known_classes: &[ResolvedClass],
) -> Result<TrajectoryStats, SimError> {
    let comp = &model.comp;
    if comp.n > 64 {
        return Err(SimError::TooManyAgents(comp.n));
    }
    if initial & !comp.full_mask() != 0 {
        return Err(SimError::BadInitial(initial));
    }
    let mut rng = trajectory_rng(config.seed, stream);
    let mut stats = TrajectoryStats {
        steps: 0,
        detected_class: None,
        hitting_time: None,
        occupancy_states: Vec::new(),
        occupancy_groups: Vec::new(),
    };
    let mut occupancy_states: BTreeMap<u64, u64> = BTreeMap::new();
    let mut occupancy_groups: BTreeMap<CountProfile, u64> = BTreeMap::new();
    match config.mode {
        SimMode::Agents => {
            let mut state = initial;
            let in_class = |c: &ResolvedClass, state: u64| c.states.binary_search(&state).is_ok();
            for step in 0..config.steps {
                state = step_agents(state, &model.rules, &mut rng);
                stats.steps = step + 1;
                match stats.detected_class {
                    None => {
                        if let Some(i) = known_classes.iter().position(|c| in_class(c, state)) {
                            stats.detected_class = Some(i);
                            stats.hitting_time = Some(step + 1);
                            *occupancy_states.entry(state).or_insert(0) += 1;
                            if config.halt_on_detection {
                                break;
                            }
                        }
                    }
                    Some(i) => {
                        if !in_class(&known_classes[i], state) {
                            return Err(SimError::LeftDetectedClass { step: step + 1 });
                        }
                        *occupancy_states.entry(state).or_insert(0) += 1;
                    }
                }
            }
        }
        SimMode::Groups => {
            let rules = GroupRules::from_model(model)?;
            let mut g = profile_of(initial, comp);
            for step in 0..config.steps {
                g = step_groups(g, &rules, &mut rng);
                stats.steps = step + 1;
                match stats.detected_class {
                    None => {
                        if let Some(i) = known_classes
                            .iter()
                            .position(|c| class_contains_profile(c, comp, g))
                        {
                            stats.detected_class = Some(i);
                            stats.hitting_time = Some(step + 1);
                            *occupancy_groups.entry(g).or_insert(0) += 1;
                            if config.halt_on_detection {
                                break;
                            }
                        }
                    }
                    Some(i) => {
                        if !class_contains_profile(&known_classes[i], comp, g) {
                            return Err(SimError::LeftDetectedClass { step: step + 1 });
                        }
                        *occupancy_groups.entry(g).or_insert(0) += 1;
                    }
                }
            }
        }
    }
    stats.occupancy_states = occupancy_states.into_iter().collect();
    stats.occupancy_groups = occupancy_groups.into_iter().collect();
    Ok(stats)
}

/// Run many trajectories in parallel; trajectory `i` uses stream `i`, so the
/// result is independent of scheduling.
pub fn run_many(
    model: &Model,
    initial: u64,
    runs: u64,
    config: &SimConfig,
    known_classes: &[ResolvedClass],
) -> Result<Vec<TrajectoryStats>, SimError> {
    (0..runs)
        .into_par_iter()
        .map(|i| run_trajectory(model, initial, config, i, known_classes))
        .collect()
}

/// Histogram of the next total yes-count over `draws` independent one-step
/// transitions from `initial`. Work is batched so the result only depends
/// on the seed, not on scheduling.
pub fn one_step_count_histogram(
    model: &Model,
    initial: u64,
    draws: u64,
    mode: SimMode,
    seed: u64,
) -> Result<Vec<u64>, SimError> {
    let comp = &model.comp;
    if comp.n > 64 {
        return Err(SimError::TooManyAgents(comp.n));
    }
    if initial & !comp.full_mask() != 0 {
        return Err(SimError::BadInitial(initial));
    }
    let group_rules = match mode {
        SimMode::Groups => Some(GroupRules::from_model(model)?),
        SimMode::Agents => None,
    };
    let g0 = profile_of(initial, comp);
    const BATCH: u64 = 10_000;
    let batches = draws.div_ceil(BATCH);
    let histograms: Vec<Vec<u64>> = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = trajectory_rng(seed, batch);
            let mut hist = vec![0u64; comp.n as usize + 1];
            let in_batch = BATCH.min(draws - batch * BATCH);
            for _ in 0..in_batch {
                let count = match (&group_rules, mode) {
                    (Some(rules), SimMode::Groups) => step_groups(g0, rules, &mut rng).total(),
                    _ => step_agents(initial, &model.rules, &mut rng).count_ones(),
                };
                hist[count as usize] += 1;
            }
            hist
        })
        .collect();
    let mut total = vec![0u64; comp.n as usize + 1];
    for hist in histograms {
        for (t, h) in total.iter_mut().zip(hist) {
            *t += h;
        }
    }
    Ok(total)
}

/// The group-count path of one trajectory (for CSV dumps and byte-for-byte
/// reproducibility checks). Row 0 is the initial state.
pub fn trajectory_counts(
    model: &Model,
    initial: u64,
    config: &SimConfig,
    stream: u64,
) -> Result<Vec<CountProfile>, SimError> {
    let comp = &model.comp;
    if comp.n > 64 {
        return Err(SimError::TooManyAgents(comp.n));
    }
    if initial & !comp.full_mask() != 0 {
        return Err(SimError::BadInitial(initial));
    }
    let mut rng = trajectory_rng(config.seed, stream);
    let mut path = Vec::with_capacity(config.steps as usize + 1);
    match config.mode {
        SimMode::Agents => {
            let mut state = initial;
            path.push(profile_of(state, comp));
            for _ in 0..config.steps {
                state = step_agents(state, &model.rules, &mut rng);
                path.push(profile_of(state, comp));
            }
        }
        SimMode::Groups => {
            let rules = GroupRules::from_model(model)?;
            let mut g = profile_of(initial, comp);
            path.push(g);
            for _ in 0..config.steps {
                g = step_groups(g, &rules, &mut rng);
                path.push(g);
            }
        }
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;
    use crate::stats::chi_square_two_sample;
    use crate::transitions::transition_probability;

    fn scenario(n_c: u32, n_a: u32, n_m: u32, z: (u32, u32, u32, u32)) -> Scenario {
        Scenario {
            n: n_c + n_a + n_m,
            n_c,
            n_a,
            n_m,
            l_c: z.0,
            r_c: z.1,
            l_a: z.2,
            r_a: z.3,
            alphas: None,
            rules: None,
        }
    }

    #[test]
    fn empty_state_jumps_to_all_anti_surely() {
        let model = scenario(3, 2, 0, (1, 1, 1, 1)).build().unwrap();
        let mut rng = trajectory_rng(1, 0);
        for _ in 0..50 {
            assert_eq!(
                step_agents(0, &model.rules, &mut rng),
                model.comp.anti_conformist_mask()
            );
        }
        let rules = GroupRules::from_model(&model).unwrap();
        for _ in 0..50 {
            let g = step_groups(CountProfile::new(0, 0, 0), &rules, &mut rng);
            assert_eq!((g.k_c, g.k_a, g.k_m), (0, 2, 0));
        }
    }

    #[test]
    fn fixed_seed_reproduces_trajectories_exactly() {
        let model = scenario(3, 2, 1, (1, 1, 1, 1)).build().unwrap();
        for mode in [SimMode::Agents, SimMode::Groups] {
            let config = SimConfig {
                steps: 200,
                mode,
                seed: 42,
                halt_on_detection: false,
            };
            let a = trajectory_counts(&model, 0b10101, &config, 3).unwrap();
            let b = trajectory_counts(&model, 0b10101, &config, 3).unwrap();
            assert_eq!(a, b);
            let c = trajectory_counts(&model, 0b10101, &config, 4).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn one_step_distribution_matches_exact_probabilities() {
        let model = scenario(3, 3, 0, (1, 1, 1, 1)).build().unwrap();
        let source = 0b000111u64;
        let draws = 100_000u64;
        let mut rng = trajectory_rng(7, 0);
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        for _ in 0..draws {
            *counts
                .entry(step_agents(source, &model.rules, &mut rng))
                .or_insert(0) += 1;
        }
        for target in 0..(1u64 << 6) {
            let p = transition_probability(source, target, &model.rules);
            let observed = *counts.get(&target).unwrap_or(&0) as f64;
            let expected = p * draws as f64;
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (observed - expected).abs() <= 3.0 * sigma.max(1.0),
                "target {target:b}: observed {observed} expected {expected}"
            );
        }
    }

    #[test]
    fn group_and_agent_modes_agree_in_distribution() {
        let model = scenario(4, 3, 3, (2, 2, 2, 2)).build().unwrap();
        let n = model.comp.n;
        let draws = 100_000u64;
        for s0 in [2u32, 5, 8] {
            let source = crate::model::low_mask(s0);
            let mut agent_hist = vec![0u64; n as usize + 1];
            let mut group_hist = vec![0u64; n as usize + 1];
            let mut rng_a = trajectory_rng(11, 0);
            let mut rng_g = trajectory_rng(13, 1);
            let rules = GroupRules::from_model(&model).unwrap();
            let g0 = profile_of(source, &model.comp);
            for _ in 0..draws {
                let next = step_agents(source, &model.rules, &mut rng_a);
                agent_hist[next.count_ones() as usize] += 1;
                let g = step_groups(g0, &rules, &mut rng_g);
                group_hist[g.total() as usize] += 1;
            }
            let result = chi_square_two_sample(&agent_hist, &group_hist);
            assert!(
                result.p_value > 0.001,
                "s0={s0}: chi2={} df={} p={}",
                result.statistic,
                result.degrees_of_freedom,
                result.p_value
            );
        }
    }

    #[test]
    fn group_marginals_match_expectation() {
        let model = scenario(6, 4, 0, (2, 2, 1, 1)).build().unwrap();
        let rules = GroupRules::from_model(&model).unwrap();
        let s = 5u32;
        let p_c = model.rules[0].value(s);
        let draws = 200_000u64;
        let mut rng = trajectory_rng(17, 0);
        let mut total_kc = 0u64;
        let g0 = CountProfile::new(3, 2, 0);
        assert_eq!(g0.total(), s);
        for _ in 0..draws {
            total_kc += step_groups(g0, &rules, &mut rng).k_c as u64;
        }
        let mean = total_kc as f64 / draws as f64;
        let expected = 6.0 * p_c;
        let sigma = (6.0 * p_c * (1.0 - p_c) / draws as f64).sqrt();
        assert!(
            (mean - expected).abs() < 4.0 * sigma,
            "mean {mean} expected {expected}"
        );
    }

    #[test]
    fn detection_and_closure_checking() {
        // Conformist majority: both singleton classes exist; from the empty
        // state the trajectory is absorbed into all-anti at step one.
        let model = scenario(5, 1, 0, (1, 1, 1, 1)).build().unwrap();
        let prediction = crate::classify::predict(&model.comp, &model.z).unwrap();
        let classes = crate::classify::materialize(&prediction, &model.comp);
        let config = SimConfig {
            steps: 50,
            mode: SimMode::Agents,
            seed: 5,
            halt_on_detection: false,
        };
        let stats = run_trajectory(&model, 0, &config, 0, &classes).unwrap();
        assert_eq!(stats.hitting_time, Some(1));
        let class = &classes[stats.detected_class.unwrap()];
        assert_eq!(class.states, vec![model.comp.anti_conformist_mask()]);
        assert_eq!(stats.occupancy_states.len(), 1);
    }

    #[test]
    fn group_alternation_shows_up_as_period_two_path() {
        // Scarce conformists: once absorbed, the trajectory alternates
        // between the two group states every step.
        let model = scenario(2, 8, 0, (2, 2, 2, 2)).build().unwrap();
        let config = SimConfig {
            steps: 60,
            mode: SimMode::Agents,
            seed: 31,
            halt_on_detection: false,
        };
        let path = trajectory_counts(&model, 0b1111, &config, 0).unwrap();
        let tail = &path[20..];
        for pair in tail.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let all_anti = a.k_c == 0 && a.k_a == 8;
            let all_conf = a.k_c == 2 && a.k_a == 0;
            assert!(all_anti || all_conf, "unexpected state {a:?}");
            if all_anti {
                assert_eq!((b.k_c, b.k_a), (2, 0));
            } else {
                assert_eq!((b.k_c, b.k_a), (0, 8));
            }
        }
    }

    #[test]
    fn heterogeneous_mixed_rules_split_into_classes() {
        let mut sc = scenario(1, 1, 3, (1, 1, 1, 1));
        sc.alphas = Some(vec![0.25, 0.25, 0.75]);
        let model = sc.build().unwrap();
        let rules = GroupRules::from_model(&model).unwrap();
        assert_eq!(rules.mixed.len(), 2);
        let counts: Vec<u32> = rules.mixed.iter().map(|(_, c)| *c).collect();
        assert_eq!(counts, vec![2, 1]);
    }

    #[test]
    fn heterogeneous_conformist_tables_are_rejected_in_group_mode() {
        let mut sc = scenario(2, 1, 0, (1, 0, 0, 0));
        sc.rules = Some(vec![
            vec![0.0, 0.0, 0.4, 1.0],
            vec![0.0, 0.0, 0.6, 1.0],
            vec![1.0, 0.5, 0.5, 0.0],
        ]);
        let model = sc.build().unwrap();
        assert!(matches!(
            GroupRules::from_model(&model),
            Err(SimError::HeterogeneousRules("conformist"))
        ));
    }

    #[test]
    fn million_agent_group_stepping_meets_throughput_target() {
        let comp = SocietyComposition::new(600_000, 300_000, 100_000).unwrap();
        let z = InfluenceabilityParams::new(200_000, 150_000, 100_000, 250_000);
        let rules = GroupRules::new(&comp, &z, &vec![0.5; 100_000]).unwrap();
        let mut rng = trajectory_rng(23, 0);
        let mut g = CountProfile::new(123_456, 54_321, 99_999);
        let steps = 20_000u64;
        let start = std::time::Instant::now();
        for _ in 0..steps {
            g = step_groups(g, &rules, &mut rng);
        }
        let rate = steps as f64 / start.elapsed().as_secs_f64();
        assert!(g.total() <= comp.n);
        assert!(rate >= 10_000.0, "group stepping at {rate:.0} steps/s");
    }
}
