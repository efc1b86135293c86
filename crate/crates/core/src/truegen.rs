//! True-equation generation: instantiate a random axiom with random terms,
//! then take a random walk of sound rewrites.

use std::ops::AddAssign;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::axioms::{AxiomSet, RewriteRule};
use crate::corrupt::Mutation;
use crate::eval::{evaluate, EvalResult};
use crate::expr::Equation;
use crate::oracle::{sample_env, verify, OracleConfig, Outcome, Verdict};
use crate::random::{rng_from_seed, ExprSampler};
use crate::rewrite::{apply_rule, applicable_rewrites, instantiate_axiom, RewriteStep, Substitution};

#[derive(Clone, Debug, PartialEq)]
pub struct TrueGenConfig {
    /// Rewrite steps after instantiation.
    pub depth_walk: usize,
    /// Depth bound for terms bound to pattern variables.
    pub instantiation_depth: usize,
    /// Node cap on the whole equation.
    pub max_nodes: usize,
    pub seed: u64,
    /// Attempts per record before giving up.
    pub retry_budget: usize,
    pub oracle: OracleConfig,
    pub sampler: ExprSampler,
}

impl Default for TrueGenConfig {
    fn default() -> Self {
        TrueGenConfig {
            depth_walk: 3,
            instantiation_depth: 2,
            max_nodes: 64,
            seed: 0,
            retry_budget: 20,
            oracle: OracleConfig::default(),
            sampler: ExprSampler::default(),
        }
    }
}

/// Counters accumulated while generating.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenStats {
    pub attempts: usize,
    /// Candidates the oracle could not decide.
    pub unknown_regenerations: usize,
    /// Derived "true" candidates the oracle found false.
    pub unsound_regenerations: usize,
    /// Mutants the oracle found true.
    pub rejected_true_mutants: usize,
    /// Mutants that introduced a flagged artifact.
    pub artifact_rejections: usize,
    /// Steps or candidates discarded for exceeding the node cap.
    pub size_rejections: usize,
    /// Conditional-rule steps whose instance failed the oracle.
    pub gated_steps: usize,
    /// Walks that ran out of applicable steps early.
    pub exhausted_walks: usize,
    /// Equations with no legal site for a mutation kind.
    pub no_site_mutations: usize,
}

impl AddAssign<&GenStats> for GenStats {
    fn add_assign(&mut self, o: &GenStats) {
        self.attempts += o.attempts;
        self.unknown_regenerations += o.unknown_regenerations;
        self.unsound_regenerations += o.unsound_regenerations;
        self.rejected_true_mutants += o.rejected_true_mutants;
        self.artifact_rejections += o.artifact_rejections;
        self.size_rejections += o.size_rejections;
        self.gated_steps += o.gated_steps;
        self.exhausted_walks += o.exhausted_walks;
        self.no_site_mutations += o.no_site_mutations;
    }
}

/// How a record's equation was derived. Replaying it reproduces the
/// equation exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub seed_axiom_id: String,
    pub instantiation: Substitution,
    pub trace: Vec<RewriteStep>,
    /// The single invalid change and how many trace steps precede it.
    pub mutation: Option<(usize, Mutation)>,
    pub walk_exhausted: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub equation: Equation,
    pub provenance: Provenance,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum GenError {
    #[error("axiom set has no rules usable for rewriting")]
    EmptyAxiomSet,
    #[error("gave up after {attempts} attempts (last oracle outcome: {last})")]
    RetriesExhausted { attempts: usize, last: Outcome },
}

/// Redraws allowed for an instance that is undefined at a random point.
const INSTANCE_REDRAWS: usize = 16;

fn defined_somewhere<R: Rng + ?Sized>(eq: &Equation, cfg: &OracleConfig, rng: &mut R) -> bool {
    let env = sample_env(&eq.free_variables(), cfg, rng);
    let finite = |e| matches!(evaluate(e, &env), Ok(EvalResult::Finite(_)));
    finite(&eq.lhs) && finite(&eq.rhs)
}

/// A uniformly chosen rule with each pattern variable bound to an
/// independent random term. True by construction.
pub fn random_instance<R: Rng + ?Sized>(
    ax: &AxiomSet,
    cfg: &TrueGenConfig,
    rng: &mut R,
) -> Result<(Equation, Provenance), GenError> {
    let rules: Vec<&RewriteRule> = ax.rewrite_rules().collect();
    let rule = rules.choose(rng).ok_or(GenError::EmptyAxiomSet)?;
    let mut vars = rule.lhs.free_variables();
    vars.extend(rule.rhs.free_variables());
    let draw = |rng: &mut R| -> Substitution {
        vars.iter().map(|v| (*v, cfg.sampler.expr(cfg.instantiation_depth, rng))).collect()
    };
    // Redraw bindings that leave the instance undefined at a random point,
    // e.g. `x / 0`, `asin 10` or `cot x` with x bound to 0; such instances
    // are true but the oracle cannot confirm them.
    let mut sigma = draw(rng);
    let mut eq = instantiate_axiom(rule, &sigma);
    for _ in 0..INSTANCE_REDRAWS {
        if defined_somewhere(&eq, &cfg.oracle, rng) {
            break;
        }
        sigma = draw(rng);
        eq = instantiate_axiom(rule, &sigma);
    }
    Ok((
        eq,
        Provenance {
            seed_axiom_id: rule.id.clone(),
            instantiation: sigma,
            trace: Vec::new(),
            mutation: None,
            walk_exhausted: false,
        },
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Walk {
    pub equation: Equation,
    pub trace: Vec<RewriteStep>,
    pub exhausted: bool,
}

/// Up to `steps` rewrites, each drawn uniformly from the applicable steps.
/// The inverse of the previous step, no-op steps, steps that exceed the node
/// cap and conditional-rule steps whose instance fails the oracle are
/// skipped.
pub fn random_walk<R: Rng + ?Sized>(
    start: Equation,
    ax: &AxiomSet,
    steps: usize,
    cfg: &TrueGenConfig,
    rng: &mut R,
    stats: &mut GenStats,
) -> Walk {
    let mut eq = start;
    let mut trace: Vec<RewriteStep> = Vec::with_capacity(steps);
    let mut exhausted = false;
    'walk: for _ in 0..steps {
        let mut candidates = applicable_rewrites(&eq, ax);
        if let Some(prev) = trace.last() {
            candidates.retain(|c| !c.is_inverse_of(prev));
        }
        loop {
            if candidates.is_empty() {
                exhausted = true;
                break 'walk;
            }
            let step = candidates.swap_remove(rng.gen_range(0..candidates.len()));
            let rule = ax.get(&step.rule_id).expect("step comes from this axiom set");
            if rule.is_conditional() && !instance_holds(rule, &step, cfg, rng) {
                stats.gated_steps += 1;
                continue;
            }
            let next = apply_rule(&eq, &step, rule).expect("fresh step applies");
            if next == eq {
                continue;
            }
            if next.node_count() > cfg.max_nodes {
                stats.size_rejections += 1;
                continue;
            }
            eq = next;
            trace.push(step);
            break;
        }
    }
    if exhausted {
        stats.exhausted_walks += 1;
    }
    Walk {
        equation: eq,
        trace,
        exhausted,
    }
}

fn instance_holds<R: Rng + ?Sized>(rule: &RewriteRule, step: &RewriteStep, cfg: &TrueGenConfig, rng: &mut R) -> bool {
    // Variables the match leaves unbound stay free and are sampled.
    let instance = instantiate_axiom(rule, &step.substitution);
    verify(&instance, &cfg.oracle, rng).outcome == Outcome::True
}

/// Instantiation, walk and oracle check with retries, drawing from `rng`.
pub fn generate_true_with<R: Rng + ?Sized>(
    ax: &AxiomSet,
    cfg: &TrueGenConfig,
    rng: &mut R,
    stats: &mut GenStats,
) -> Result<Generated, GenError> {
    let mut last = Outcome::Unknown;
    for _ in 0..cfg.retry_budget.max(1) {
        stats.attempts += 1;
        let (start, mut provenance) = random_instance(ax, cfg, rng)?;
        if start.node_count() > cfg.max_nodes {
            stats.size_rejections += 1;
            continue;
        }
        let walk = random_walk(start, ax, cfg.depth_walk, cfg, rng, stats);
        let verdict = verify(&walk.equation, &cfg.oracle, rng);
        last = verdict.outcome;
        match verdict.outcome {
            Outcome::True => {
                provenance.trace = walk.trace;
                provenance.walk_exhausted = walk.exhausted;
                return Ok(Generated {
                    equation: walk.equation,
                    provenance,
                    verdict,
                });
            }
            Outcome::Unknown => stats.unknown_regenerations += 1,
            Outcome::False => stats.unsound_regenerations += 1,
        }
    }
    Err(GenError::RetriesExhausted {
        attempts: cfg.retry_budget.max(1),
        last,
    })
}

/// One true record on its own RNG stream.
pub fn generate_true(ax: &AxiomSet, cfg: &TrueGenConfig, seed: u64) -> Result<(Generated, GenStats), GenError> {
    let mut rng = rng_from_seed(seed);
    let mut stats = GenStats::default();
    let g = generate_true_with(ax, cfg, &mut rng, &mut stats)?;
    Ok((g, stats))
}
