//! Command-line front end: scenario validation, classification, exact
//! enumeration, sweep verification, Monte-Carlo simulation, phase-diagram
//! grids, and weight/rule conversion.
//!
//! Structured output (JSON or CSV) goes to stdout; human-readable summaries
//! and diagnostics go to stderr. Exit codes: 0 success, 1 invalid input,
//! 2 verification mismatches.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use conformity::chain::{self, PossibilityDigraph};
use conformity::classify::{self, ResolvedClass};
use conformity::model::{owa_from_rule, rule_from_owa, AgentKind, AggregationRule, OwaWeights};
use conformity::phase::{sweep_grid, SituationSpec};
use conformity::scenario::{Model, Scenario};
use conformity::simulate::{self, SimConfig, SimMode};
use conformity::verify::{
    verify_classifier, verify_symmetry, verify_tables, SampleSpec, SweepMode, SweepSpec,
    VerifyReport,
};

#[derive(Parser)]
#[command(
    name = "conformity",
    version,
    about = "Anonymous yes/no opinion dynamics with conformist and anti-conformist agents"
)]
struct Cli {
    /// Worker threads for parallel commands (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file against the model constraints.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Classify the absorbing classes from parameters alone, with
    /// per-inequality condition traces.
    Classify {
        #[arg(long)]
        scenario: PathBuf,
        /// Also resolve classes to explicit state lists.
        #[arg(long)]
        resolve: bool,
    },
    /// Enumerate absorbing classes by exact analysis of the full chain.
    Enumerate {
        #[arg(long)]
        scenario: PathBuf,
        /// Initial state (bitmask) for absorption probabilities.
        #[arg(long)]
        initial: Option<u64>,
    },
    /// Cross-validate the classifier and condition tables against
    /// brute-force chain analysis over exhaustive sweeps.
    Verify(VerifyArgs),
    /// Monte-Carlo trajectory sampling.
    Simulate(SimulateArgs),
    /// Phase-diagram grid sweep, written as CSV.
    Phase(PhaseArgs),
    /// Convert positional weights to an aggregation rule or back.
    Owa {
        /// Weights w_1..w_n (comma separated, summing to 1).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        weights: Option<Vec<f64>>,
        /// Rule values p(0)..p(n) of a nondecreasing 0-to-1 rule.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        rule: Option<Vec<f64>>,
    },
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 2)]
    n_min: u32,
    #[arg(long)]
    n_max: u32,
    /// Sweep compositions with mixed agents instead of the two-group case.
    #[arg(long)]
    mixed: bool,
    /// Subset of checks to run (default: all applicable).
    #[arg(long, value_delimiter = ',')]
    checks: Option<Vec<CheckKind>>,
    /// Seed for scenario subsampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep each scenario with this probability.
    #[arg(long)]
    sample: Option<f64>,
    /// Random state pairs per scenario for the symmetry check
    /// (default: exhaustive).
    #[arg(long)]
    symmetry_pairs: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckKind {
    Classifier,
    Degenerate,
    Tables,
    Symmetry,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    steps: u64,
    #[arg(long, default_value_t = 1)]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Agents)]
    mode: ModeArg,
    /// Initial state as a bitmask over agents.
    #[arg(long, default_value_t = 0)]
    initial: u64,
    /// Write the group-count path of trajectory 0 as CSV.
    #[arg(long)]
    traj_csv: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Agents,
    Groups,
}

#[derive(Args)]
struct PhaseArgs {
    /// Situation: 1 (shared thresholds), 2 (yes/no symmetric), or
    /// 3 (vanishing anti-conformist fraction).
    #[arg(long)]
    situation: u8,
    #[arg(long, default_value_t = 200)]
    resolution: u32,
    #[arg(long)]
    out: PathBuf,
    /// Situation 1: reactiveness, a float or `inf`.
    #[arg(long, default_value = "inf")]
    gamma: String,
    /// Situation 1: sweep reactiveness on the x axis at this firing
    /// threshold instead of sweeping the threshold.
    #[arg(long)]
    l: Option<f64>,
    #[arg(long, default_value_t = 9.0)]
    gamma_max: f64,
    /// Situations 2 and 3: conformist thresholds.
    #[arg(long, default_value_t = 0.25)]
    l_c: f64,
    #[arg(long, default_value_t = 0.25)]
    r_c: f64,
    /// Situation 3: anti-conformist fraction.
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
}

fn load_model(path: &PathBuf) -> Result<(Scenario, Model)> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario file {}", path.display()))?;
    let scenario: Scenario =
        serde_json::from_str(&text).context("scenario file is not valid scenario JSON")?;
    let model = scenario
        .build()
        .context("scenario violates the model constraints")?;
    Ok((scenario, model))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, value)?;
    writeln!(stdout)?;
    Ok(())
}

fn run_validate(path: PathBuf) -> Result<ExitCode> {
    let (scenario, model) = load_model(&path)?;
    #[derive(Serialize)]
    struct Validated {
        valid: bool,
        n: u32,
        n_c: u32,
        n_a: u32,
        n_m: u32,
        explicit_rules: bool,
    }
    print_json(&Validated {
        valid: true,
        n: model.comp.n,
        n_c: model.comp.n_c,
        n_a: model.comp.n_a,
        n_m: model.comp.n_m,
        explicit_rules: scenario.rules.is_some(),
    })?;
    Ok(ExitCode::SUCCESS)
}

fn run_classify(path: PathBuf, resolve: bool) -> Result<ExitCode> {
    let (_, model) = load_model(&path)?;
    let prediction = classify::predict(&model.comp, &model.z)
        .context("composition outside the classifier families; use `enumerate`")?;
    #[derive(Serialize)]
    struct Out<'a> {
        prediction: &'a classify::Prediction,
        #[serde(skip_serializing_if = "Option::is_none")]
        resolved: Option<Vec<ResolvedClass>>,
    }
    let resolved = if resolve {
        Some(classify::materialize(&prediction, &model.comp))
    } else {
        None
    };
    print_json(&Out {
        prediction: &prediction,
        resolved,
    })?;
    Ok(ExitCode::SUCCESS)
}

fn run_enumerate(path: PathBuf, initial: Option<u64>) -> Result<ExitCode> {
    let (_, model) = load_model(&path)?;
    let digraph = PossibilityDigraph::build(&model.comp, &model.z)?;
    let report = chain::report(&digraph, &model.rules, initial)?;
    print_json(&report)?;
    Ok(ExitCode::SUCCESS)
}

fn run_verify(args: VerifyArgs) -> Result<ExitCode> {
    let mode = if args.mixed {
        SweepMode::Mixed
    } else {
        SweepMode::Pure
    };
    let sample = args.sample.map(|rate| SampleSpec {
        seed: args.seed,
        rate,
    });
    let spec = SweepSpec {
        n_min: args.n_min,
        n_max: args.n_max,
        mode,
        sample,
        allow_list: Vec::new(),
    };
    let all = vec![
        CheckKind::Classifier,
        CheckKind::Degenerate,
        CheckKind::Tables,
        CheckKind::Symmetry,
    ];
    let checks = args.checks.unwrap_or(all);
    let wants = |k: CheckKind| checks.contains(&k);

    let mut report = VerifyReport {
        classifier: None,
        degenerate: None,
        tables: None,
        symmetry: None,
    };
    if wants(CheckKind::Classifier) {
        report.classifier = Some(verify_classifier(&spec));
    }
    if wants(CheckKind::Degenerate) && !args.mixed {
        let dspec = SweepSpec {
            mode: SweepMode::Degenerate,
            n_min: args.n_min.min(1),
            ..spec.clone()
        };
        report.degenerate = Some(verify_classifier(&dspec));
    }
    if wants(CheckKind::Tables) && !args.mixed {
        report.tables = Some(verify_tables(&spec));
    }
    if wants(CheckKind::Symmetry) && !args.mixed {
        report.symmetry = Some(verify_symmetry(&spec, args.symmetry_pairs));
    }

    let mut err = std::io::stderr().lock();
    if let Some(r) = &report.classifier {
        writeln!(
            err,
            "classifier: checked {} scenarios, {} mismatches",
            r.checked, r.failures
        )?;
    }
    if let Some(r) = &report.degenerate {
        writeln!(
            err,
            "degenerate: checked {} scenarios, {} mismatches",
            r.checked, r.failures
        )?;
    }
    if let Some(r) = &report.tables {
        writeln!(
            err,
            "tables:     checked {} cells and {} chains, {} disagreements",
            r.checked_cells, r.checked_chains, r.failures
        )?;
    }
    if let Some(r) = &report.symmetry {
        writeln!(
            err,
            "symmetry:   checked {} pairs, {} violations",
            r.checked_pairs, r.failures
        )?;
    }
    print_json(&report)?;
    if report.failures() > 0 {
        writeln!(err, "FAILED with {} mismatches", report.failures())?;
        return Ok(ExitCode::from(2));
    }
    writeln!(err, "0 mismatches")?;
    Ok(ExitCode::SUCCESS)
}

fn run_simulate(args: SimulateArgs) -> Result<ExitCode> {
    let (_, model) = load_model(&args.scenario)?;
    let mode = match args.mode {
        ModeArg::Agents => SimMode::Agents,
        ModeArg::Groups => SimMode::Groups,
    };
    let config = SimConfig {
        steps: args.steps,
        mode,
        seed: args.seed,
        halt_on_detection: false,
    };
    // Known classes for online absorption detection, when exactly
    // computable. Explicit rule tables share the band structure, so the
    // class structure is the same as for the canonical rules.
    let classes: Vec<ResolvedClass> = if model.comp.n <= classify::MATERIALIZE_CAP {
        classify::exact_classes(&model.comp, &model.z)
            .map(|c| classify::materialize_classes(&c, &model.comp))
            .unwrap_or_default()
    } else {
        Vec::new()
    };
    let stats = simulate::run_many(&model, args.initial, args.runs, &config, &classes)?;

    #[derive(Serialize)]
    struct ClassOut {
        ids: Vec<String>,
        period: u32,
        absorbed_runs: u64,
    }
    #[derive(Serialize)]
    struct Out {
        runs: u64,
        steps: u64,
        mode: SimMode,
        seed: u64,
        initial: u64,
        classes: Vec<ClassOut>,
        unabsorbed_runs: u64,
        mean_hitting_time: Option<f64>,
    }
    let mut absorbed = vec![0u64; classes.len()];
    let mut unabsorbed = 0u64;
    let mut hit_sum = 0u64;
    let mut hit_count = 0u64;
    for s in &stats {
        match s.detected_class {
            Some(i) => absorbed[i] += 1,
            None => unabsorbed += 1,
        }
        if let Some(h) = s.hitting_time {
            hit_sum += h;
            hit_count += 1;
        }
    }
    let out = Out {
        runs: args.runs,
        steps: args.steps,
        mode,
        seed: args.seed,
        initial: args.initial,
        classes: classes
            .iter()
            .zip(&absorbed)
            .map(|(c, &a)| ClassOut {
                ids: c.sources.iter().map(|i| i.to_string()).collect(),
                period: c.period,
                absorbed_runs: a,
            })
            .collect(),
        unabsorbed_runs: unabsorbed,
        mean_hitting_time: (hit_count > 0).then(|| hit_sum as f64 / hit_count as f64),
    };
    print_json(&out)?;

    if let Some(path) = args.traj_csv {
        let track = simulate::trajectory_counts(&model, args.initial, &config, 0)?;
        let mut file =
            fs::File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        writeln!(file, "step,k_c,k_a,k_m,s")?;
        for (step, g) in track.iter().enumerate() {
            writeln!(file, "{step},{},{},{},{}", g.k_c, g.k_a, g.k_m, g.total())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_phase(args: PhaseArgs) -> Result<ExitCode> {
    let spec = match args.situation {
        1 => match args.l {
            Some(l) => SituationSpec::OneByGamma {
                l,
                gamma_max: args.gamma_max,
            },
            None => {
                let gamma = if args.gamma.eq_ignore_ascii_case("inf")
                    || args.gamma.eq_ignore_ascii_case("infinity")
                {
                    f64::INFINITY
                } else {
                    args.gamma
                        .parse::<f64>()
                        .context("--gamma must be a float or `inf`")?
                };
                SituationSpec::One { gamma }
            }
        },
        2 => SituationSpec::Two { l_c: args.l_c },
        3 => SituationSpec::Three {
            epsilon: args.epsilon,
            l_c: args.l_c,
            r_c: args.r_c,
        },
        other => bail!("unknown situation {other}; expected 1, 2, or 3"),
    };
    let mut buffer = Vec::new();
    sweep_grid(&spec, args.resolution, &mut buffer)?;
    fs::write(&args.out, &buffer)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    eprintln!(
        "wrote {} rows to {}",
        (args.resolution as u64) * (args.resolution as u64),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_owa(weights: Option<Vec<f64>>, rule: Option<Vec<f64>>) -> Result<ExitCode> {
    #[derive(Serialize)]
    struct Out {
        weights: Vec<f64>,
        rule: Vec<f64>,
    }
    let out = match (weights, rule) {
        (Some(w), None) => {
            let weights = OwaWeights::new(w).context("invalid weight vector")?;
            let rule = rule_from_owa(&weights);
            Out {
                weights: weights.as_slice().to_vec(),
                rule: rule.values().to_vec(),
            }
        }
        (None, Some(values)) => {
            let n = values.len().saturating_sub(1) as u32;
            // Recover the thresholds the table implies, then check shape.
            let l_c = values
                .iter()
                .take_while(|&&v| v == 0.0)
                .count()
                .saturating_sub(1) as u32;
            let r_c = values
                .iter()
                .rev()
                .take_while(|&&v| v == 1.0)
                .count()
                .saturating_sub(1) as u32;
            let z = conformity::model::InfluenceabilityParams::new(l_c, r_c, 0, 0);
            let rule = AggregationRule::from_table(AgentKind::Conformist, &z, n, values)
                .context("rule table is not a valid 0-to-1 nondecreasing rule")?;
            let weights = owa_from_rule(&rule).context("rule does not define weights")?;
            Out {
                weights: weights.as_slice().to_vec(),
                rule: rule.values().to_vec(),
            }
        }
        _ => bail!("pass exactly one of --weights or --rule"),
    };
    print_json(&out)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let result = match cli.command {
        Command::Validate { scenario } => run_validate(scenario),
        Command::Classify { scenario, resolve } => run_classify(scenario, resolve),
        Command::Enumerate { scenario, initial } => run_enumerate(scenario, initial),
        Command::Verify(args) => run_verify(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Phase(args) => run_phase(args),
        Command::Owa { weights, rule } => run_owa(weights, rule),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
