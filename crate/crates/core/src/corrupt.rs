//! False-equation generation: a sound derivation with exactly one invalid
//! local change spliced into it.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::audit::introduces_artifact;
use crate::axioms::AxiomSet;
use crate::expr::{BinaryOp, Constant, Decimal, Equation, Expr, Path, Symbol, UnaryOp, Var};
use crate::oracle::{verify, Outcome};
use crate::random::{rng_from_seed, ExprSampler};
use crate::truegen::{random_instance, random_walk, GenError, GenStats, Generated, TrueGenConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutationKind {
    /// Any node's symbol replaced by another of the same arity.
    SymbolSwap,
    /// A constant moved to a neighbouring value.
    ConstantPerturb,
    /// A subterm replaced by a small random term.
    SubtreeGraft,
    /// An operator replaced by one from the same family.
    OperatorSwap,
}

impl MutationKind {
    pub const ALL: [MutationKind; 4] = [
        MutationKind::SymbolSwap,
        MutationKind::ConstantPerturb,
        MutationKind::SubtreeGraft,
        MutationKind::OperatorSwap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MutationKind::SymbolSwap => "symbol-swap",
            MutationKind::ConstantPerturb => "constant-perturb",
            MutationKind::SubtreeGraft => "subtree-graft",
            MutationKind::OperatorSwap => "operator-swap",
        }
    }
}

/// A replacement of the subterm at `path` (equation path, side first).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mutation {
    pub kind: MutationKind,
    pub path: Path,
    pub before: Expr,
    pub after: Expr,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum MutateError {
    #[error("no site for a {} mutation", .0.name())]
    NoSite(MutationKind),
    #[error("mutation at {0} does not match the equation")]
    Stale(Path),
}

const GRAFT_DEPTH: usize = 2;

/// One mutation of the given kind at a uniformly chosen legal site.
pub fn mutate<R: Rng + ?Sized>(eq: &Equation, kind: MutationKind, rng: &mut R) -> Result<(Equation, Mutation), MutateError> {
    let sites: Vec<(Path, Expr)> = eq
        .positions()
        .into_iter()
        .filter(|(_, e)| has_alternative(e, kind))
        .collect();
    let (path, before) = sites.choose(rng).ok_or(MutateError::NoSite(kind))?.clone();
    let after = replacement(&before, kind, rng);
    let m = Mutation {
        kind,
        path,
        before,
        after,
    };
    let out = apply_mutation(eq, &m)?;
    Ok((out, m))
}

/// Re-applies a recorded mutation.
pub fn apply_mutation(eq: &Equation, m: &Mutation) -> Result<Equation, MutateError> {
    match eq.subterm(&m.path) {
        Some(e) if *e == m.before => eq
            .replace_at(&m.path, m.after.clone())
            .map_err(|_| MutateError::Stale(m.path.clone())),
        _ => Err(MutateError::Stale(m.path.clone())),
    }
}

fn has_alternative(e: &Expr, kind: MutationKind) -> bool {
    match kind {
        MutationKind::SymbolSwap | MutationKind::SubtreeGraft => true,
        MutationKind::ConstantPerturb => matches!(e, Expr::Const(_)),
        MutationKind::OperatorSwap => !e.is_leaf(),
    }
}

fn replacement<R: Rng + ?Sized>(e: &Expr, kind: MutationKind, rng: &mut R) -> Expr {
    match kind {
        MutationKind::SymbolSwap => {
            let options = swap_symbols(e.symbol());
            let s = *options.choose(rng).expect("every symbol has an alternative");
            e.with_symbol(s).expect("same arity")
        }
        MutationKind::OperatorSwap => {
            let options: Vec<Symbol> = match e {
                Expr::Unary(op, _) => {
                    UnaryOp::ALL.iter().filter(|o| *o != op && o.family() == op.family()).map(|o| Symbol::Unary(*o)).collect()
                }
                Expr::Binary(op, ..) => other_binary(*op),
                _ => unreachable!("operator sites are internal"),
            };
            let s = *options.choose(rng).expect("families have several members");
            e.with_symbol(s).expect("same arity")
        }
        MutationKind::ConstantPerturb => match e {
            Expr::Const(c) => Expr::Const(perturb(*c, rng)),
            _ => unreachable!("constant sites are leaves"),
        },
        MutationKind::SubtreeGraft => {
            let sampler = ExprSampler::default();
            loop {
                let g = sampler.expr(GRAFT_DEPTH, rng);
                if g != *e {
                    return g;
                }
            }
        }
    }
}

fn swap_symbols(s: Symbol) -> Vec<Symbol> {
    match s {
        Symbol::Const(c) => Constant::NAMED.iter().filter(|n| **n != c).map(|n| Symbol::Const(*n)).collect(),
        Symbol::Var(v) => Var::ALL.iter().filter(|w| **w != v).map(|w| Symbol::Var(*w)).collect(),
        Symbol::Unary(op) => UnaryOp::ALL.iter().filter(|o| **o != op).map(|o| Symbol::Unary(*o)).collect(),
        Symbol::Binary(op) => other_binary(op),
    }
}

fn other_binary(op: BinaryOp) -> Vec<Symbol> {
    BinaryOp::ALL.iter().filter(|o| **o != op).map(|o| Symbol::Binary(*o)).collect()
}

/// Adjacent named constant by value, or one hundredth up or down for a
/// decimal, staying in range.
fn perturb<R: Rng + ?Sized>(c: Constant, rng: &mut R) -> Constant {
    let up = rng.gen_bool(0.5);
    match c {
        Constant::Decimal(d) => {
            let s = d.scaled();
            let next = if (up && s < Decimal::MAX_SCALED) || s == Decimal::MIN_SCALED { s + 1 } else { s - 1 };
            Constant::Decimal(Decimal::new(next).expect("stays in range"))
        }
        named => {
            let i = Constant::NAMED.iter().position(|n| *n == named).expect("named");
            let last = Constant::NAMED.len() - 1;
            let j = if (up && i < last) || i == 0 { i + 1 } else { i - 1 };
            Constant::NAMED[j]
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FalseGenConfig {
    /// Valid rewrites around the mutation, split at a uniform point.
    pub valid_steps: usize,
    /// Reject mutations that add a composed transcendental or a
    /// non-integer power of a transcendental.
    pub filter_artifacts: bool,
    pub max_retries: usize,
    /// Instantiation, node cap, oracle and sampler settings.
    pub base: TrueGenConfig,
}

impl Default for FalseGenConfig {
    fn default() -> Self {
        FalseGenConfig {
            valid_steps: 3,
            filter_artifacts: true,
            max_retries: 20,
            base: TrueGenConfig::default(),
        }
    }
}

/// Instance, `k1` valid steps, one mutation, `k2` valid steps; accepted
/// only if the oracle returns False.
pub fn generate_false_with<R: Rng + ?Sized>(
    ax: &AxiomSet,
    cfg: &FalseGenConfig,
    rng: &mut R,
    stats: &mut GenStats,
) -> Result<Generated, GenError> {
    let base = &cfg.base;
    let mut last = Outcome::Unknown;
    for _ in 0..cfg.max_retries.max(1) {
        stats.attempts += 1;
        let (start, mut provenance) = random_instance(ax, base, rng)?;
        if start.node_count() > base.max_nodes {
            stats.size_rejections += 1;
            continue;
        }
        let k1 = rng.gen_range(0..=cfg.valid_steps);
        let k2 = cfg.valid_steps - k1;
        let first = random_walk(start, ax, k1, base, rng, stats);

        let mut kinds = MutationKind::ALL;
        kinds.shuffle(rng);
        let mut mutated = None;
        for kind in kinds {
            match mutate(&first.equation, kind, rng) {
                Ok(m) => {
                    mutated = Some(m);
                    break;
                }
                Err(_) => stats.no_site_mutations += 1,
            }
        }
        let Some((broken, mutation)) = mutated else { continue };
        if cfg.filter_artifacts && introduces_artifact(&first.equation, &broken) {
            stats.artifact_rejections += 1;
            continue;
        }
        if broken.node_count() > base.max_nodes {
            stats.size_rejections += 1;
            continue;
        }

        let second = random_walk(broken, ax, k2, base, rng, stats);
        let verdict = verify(&second.equation, &base.oracle, rng);
        last = verdict.outcome;
        match verdict.outcome {
            Outcome::False => {
                provenance.trace = first.trace;
                let after_step = provenance.trace.len();
                provenance.trace.extend(second.trace);
                provenance.mutation = Some((after_step, mutation));
                provenance.walk_exhausted = first.exhausted || second.exhausted;
                return Ok(Generated {
                    equation: second.equation,
                    provenance,
                    verdict,
                });
            }
            Outcome::True => stats.rejected_true_mutants += 1,
            Outcome::Unknown => stats.unknown_regenerations += 1,
        }
    }
    Err(GenError::RetriesExhausted {
        attempts: cfg.max_retries.max(1),
        last,
    })
}

/// One false record on its own RNG stream.
pub fn generate_false(ax: &AxiomSet, cfg: &FalseGenConfig, seed: u64) -> Result<(Generated, GenStats), GenError> {
    let mut rng = rng_from_seed(seed);
    let mut stats = GenStats::default();
    let g = generate_false_with(ax, cfg, &mut rng, &mut stats)?;
    Ok((g, stats))
}
