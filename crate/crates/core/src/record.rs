//! JSONL dataset records, whole-dataset generation and provenance replay.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::axioms::AxiomSet;
use crate::corrupt::{apply_mutation, generate_false, FalseGenConfig, MutateError, Mutation, MutationKind};
use crate::expr::{Equation, Path, Var};
use crate::oracle::{verify, OracleConfig, Outcome, Verdict};
use crate::parse::{parse_equation, parse_expr, ParseError};
use crate::random::{derive_seed, rng_from_seed};
use crate::rewrite::{apply_rewrite, instantiate_axiom, Direction, RewriteError, RewriteStep, Substitution};
use crate::truegen::{generate_true, GenError, GenStats, Generated, Provenance, TrueGenConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub rule_id: String,
    pub direction: Direction,
    pub path: Vec<usize>,
    pub substitution: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MutationRecord {
    pub kind: MutationKind,
    pub path: Vec<usize>,
    pub before: String,
    pub after: String,
    /// Number of trace steps taken before the mutation.
    pub after_step: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub seed_axiom_id: String,
    pub instantiation: BTreeMap<String, String>,
    pub trace: Vec<StepRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation: Option<MutationRecord>,
    pub walk_exhausted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictSummary {
    pub outcome: Outcome,
    pub valid_samples: usize,
    pub max_deviation: f64,
    pub domain_errors: usize,
    pub overflows: usize,
}

impl From<&Verdict> for VerdictSummary {
    fn from(v: &Verdict) -> Self {
        VerdictSummary {
            outcome: v.outcome,
            valid_samples: v.valid_samples(),
            max_deviation: v.max_deviation(),
            domain_errors: v.domain_errors,
            overflows: v.overflows,
        }
    }
}

/// One line of a dataset file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub equation: String,
    pub label: bool,
    pub provenance: ProvenanceRecord,
    pub seed: u64,
    pub verdict_at_generation: VerdictSummary,
}

fn sub_to_map(s: &Substitution) -> BTreeMap<String, String> {
    s.iter().map(|(v, e)| (v.name().to_string(), e.to_string())).collect()
}

fn map_to_sub(m: &BTreeMap<String, String>) -> Result<Substitution, ReplayError> {
    m.iter()
        .map(|(k, v)| {
            let var = Var::from_name(k).ok_or_else(|| ReplayError::UnknownVariable(k.clone()))?;
            Ok((var, parse_expr(v)?))
        })
        .collect()
}

impl From<&Provenance> for ProvenanceRecord {
    fn from(p: &Provenance) -> Self {
        ProvenanceRecord {
            seed_axiom_id: p.seed_axiom_id.clone(),
            instantiation: sub_to_map(&p.instantiation),
            trace: p
                .trace
                .iter()
                .map(|s| StepRecord {
                    rule_id: s.rule_id.clone(),
                    direction: s.direction,
                    path: s.path.0.clone(),
                    substitution: sub_to_map(&s.substitution),
                })
                .collect(),
            mutation: p.mutation.as_ref().map(|(k, m)| MutationRecord {
                kind: m.kind,
                path: m.path.0.clone(),
                before: m.before.to_string(),
                after: m.after.to_string(),
                after_step: *k,
            }),
            walk_exhausted: p.walk_exhausted,
        }
    }
}

impl ProvenanceRecord {
    pub fn to_provenance(&self) -> Result<Provenance, ReplayError> {
        let trace = self
            .trace
            .iter()
            .map(|s| {
                Ok(RewriteStep {
                    rule_id: s.rule_id.clone(),
                    direction: s.direction,
                    path: Path(s.path.clone()),
                    substitution: map_to_sub(&s.substitution)?,
                })
            })
            .collect::<Result<Vec<_>, ReplayError>>()?;
        let mutation = match &self.mutation {
            None => None,
            Some(m) => Some((
                m.after_step,
                Mutation {
                    kind: m.kind,
                    path: Path(m.path.clone()),
                    before: parse_expr(&m.before)?,
                    after: parse_expr(&m.after)?,
                },
            )),
        };
        Ok(Provenance {
            seed_axiom_id: self.seed_axiom_id.clone(),
            instantiation: map_to_sub(&self.instantiation)?,
            trace,
            mutation,
            walk_exhausted: self.walk_exhausted,
        })
    }
}

impl DatasetRecord {
    pub fn new(index: usize, label: bool, seed: u64, g: &Generated) -> DatasetRecord {
        DatasetRecord {
            id: format!("rec-{index:06}"),
            equation: g.equation.to_string(),
            label,
            provenance: ProvenanceRecord::from(&g.provenance),
            seed,
            verdict_at_generation: VerdictSummary::from(&g.verdict),
        }
    }

    pub fn parsed_equation(&self) -> Result<Equation, ParseError> {
        parse_equation(&self.equation)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("unknown seed axiom {0}")]
    UnknownAxiom(String),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("step {index}: {source}")]
    Step { index: usize, source: RewriteError },
    #[error(transparent)]
    Mutation(#[from] MutateError),
    #[error("mutation after step {0} is past the end of the trace")]
    MutationOutOfRange(usize),
}

/// Rebuilds an equation from its provenance.
pub fn replay(p: &Provenance, ax: &AxiomSet) -> Result<Equation, ReplayError> {
    let rule = ax
        .get(&p.seed_axiom_id)
        .ok_or_else(|| ReplayError::UnknownAxiom(p.seed_axiom_id.clone()))?;
    let mut eq = instantiate_axiom(rule, &p.instantiation);
    if let Some((k, _)) = &p.mutation {
        if *k > p.trace.len() {
            return Err(ReplayError::MutationOutOfRange(*k));
        }
    }
    for i in 0..=p.trace.len() {
        if let Some((k, m)) = &p.mutation {
            if *k == i {
                eq = apply_mutation(&eq, m)?;
            }
        }
        if let Some(step) = p.trace.get(i) {
            eq = apply_rewrite(&eq, step, ax).map_err(|source| ReplayError::Step { index: i, source })?;
        }
    }
    Ok(eq)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetConfig {
    pub true_count: usize,
    pub false_count: usize,
    pub seed: u64,
    pub truegen: TrueGenConfig,
    pub falsegen: FalseGenConfig,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            true_count: 100,
            false_count: 100,
            seed: 0,
            truegen: TrueGenConfig::default(),
            falsegen: FalseGenConfig::default(),
        }
    }
}

/// True records first, then false ones. Record `i` uses its own stream
/// derived from the base seed, so output does not depend on thread count.
pub fn generate_dataset(ax: &AxiomSet, cfg: &DatasetConfig) -> Result<(Vec<DatasetRecord>, GenStats), GenError> {
    let total = cfg.true_count + cfg.false_count;
    let results: Vec<Result<(DatasetRecord, GenStats), GenError>> = (0..total)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(cfg.seed, i as u64);
            let label = i < cfg.true_count;
            let (g, stats) = if label {
                generate_true(ax, &cfg.truegen, seed)?
            } else {
                generate_false(ax, &cfg.falsegen, seed)?
            };
            Ok((DatasetRecord::new(i, label, seed, &g), stats))
        })
        .collect();
    let mut records = Vec::with_capacity(total);
    let mut stats = GenStats::default();
    for r in results {
        let (rec, s) = r?;
        stats += &s;
        records.push(rec);
    }
    Ok((records, stats))
}

/// Re-verifies equations with fresh streams derived from `seed`.
pub fn verify_all(eqs: &[Equation], cfg: &OracleConfig, seed: u64) -> Vec<Verdict> {
    eqs.par_iter()
        .enumerate()
        .map(|(i, eq)| verify(eq, cfg, &mut rng_from_seed(derive_seed(seed, i as u64))))
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub total: usize,
    pub agree: usize,
    pub disagree: usize,
    pub unknown: usize,
}

impl Agreement {
    pub fn tally(labels: &[bool], verdicts: &[Verdict]) -> Agreement {
        let mut a = Agreement {
            total: labels.len(),
            ..Agreement::default()
        };
        for (l, v) in labels.iter().zip(verdicts) {
            match (v.outcome, l) {
                (Outcome::Unknown, _) => a.unknown += 1,
                (Outcome::True, true) | (Outcome::False, false) => a.agree += 1,
                _ => a.disagree += 1,
            }
        }
        a
    }

    pub fn agreement_rate(&self) -> f64 {
        if self.total == 0 {
            return 1.0;
        }
        self.agree as f64 / self.total as f64
    }

    pub fn unknown_rate(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.unknown as f64 / self.total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::curated_axiom_set;

    fn small() -> DatasetConfig {
        DatasetConfig {
            true_count: 20,
            false_count: 20,
            seed: 11,
            ..DatasetConfig::default()
        }
    }

    #[test]
    fn records_replay_to_their_equation() {
        let ax = curated_axiom_set();
        let (records, _) = generate_dataset(&ax, &small()).unwrap();
        assert_eq!(records.len(), 40);
        for r in &records {
            let line = r.to_json_line();
            let back: DatasetRecord = serde_json::from_str(&line).unwrap();
            assert_eq!(&back, r);
            let p = back.provenance.to_provenance().unwrap();
            assert_eq!(replay(&p, &ax).unwrap(), r.parsed_equation().unwrap(), "{}", r.id);
            assert_eq!(r.label, back.provenance.mutation.is_none());
        }
        assert_eq!(records[0].id, "rec-000000");
        assert!(records[..20].iter().all(|r| r.label));
    }

    #[test]
    fn generation_is_deterministic() {
        let ax = curated_axiom_set();
        let a = generate_dataset(&ax, &small()).unwrap();
        let b = generate_dataset(&ax, &small()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tampered_trace_fails_to_replay() {
        let ax = curated_axiom_set();
        let (records, _) = generate_dataset(&ax, &small()).unwrap();
        let r = records.iter().find(|r| !r.provenance.trace.is_empty()).unwrap();
        let mut p = r.provenance.to_provenance().unwrap();
        p.trace[0].path = Path(vec![7]);
        assert!(matches!(replay(&p, &ax), Err(ReplayError::Step { index: 0, .. })));
        p.seed_axiom_id = "nope".into();
        assert!(matches!(replay(&p, &ax), Err(ReplayError::UnknownAxiom(_))));
    }

    #[test]
    fn agreement_tally() {
        let v = |o| Verdict {
            outcome: o,
            ..Verdict::empty()
        };
        let a = Agreement::tally(
            &[true, false, true, false],
            &[v(Outcome::True), v(Outcome::False), v(Outcome::Unknown), v(Outcome::True)],
        );
        assert_eq!((a.agree, a.disagree, a.unknown), (2, 1, 1));
        assert_eq!(a.agreement_rate(), 0.5);
    }
}
