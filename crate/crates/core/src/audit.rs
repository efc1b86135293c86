//! Label-blind structural features and a leakage check: if a trivial
//! classifier on these features separates true from false records, the
//! false set carries generation artifacts.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::axioms::AxiomSet;
use crate::expr::{BinaryOp, Equation, Expr};
use crate::rewrite::match_pattern;

pub const FEATURE_NAMES: [&str; 6] = [
    "composed_transcendental",
    "noninteger_power_of_transcendental",
    "embedded_identity_fragment",
    "node_count",
    "depth",
    "constant_count",
];

/// Minimum records per class for a report.
pub const MIN_PER_CLASS: usize = 50;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Transcendental operators applied directly to another, as in sin(sin x).
    pub composed_transcendental: usize,
    /// A power whose base is a transcendental application and whose exponent
    /// is not an integer constant.
    pub noninteger_power_of_transcendental: bool,
    /// A proper subterm that is an instance of a recognisable axiom side.
    pub embedded_identity_fragment: bool,
    pub node_count: usize,
    /// Counting the `=` root.
    pub depth: usize,
    pub constant_count: usize,
}

impl FeatureVector {
    pub fn values(&self) -> [f64; 6] {
        [
            self.composed_transcendental as f64,
            f64::from(u8::from(self.noninteger_power_of_transcendental)),
            f64::from(u8::from(self.embedded_identity_fragment)),
            self.node_count as f64,
            self.depth as f64,
            self.constant_count as f64,
        ]
    }
}

/// The axiom sides worth spotting inside a term: non-trivial ones that
/// mention a constant or an operator other than the ring operations.
#[derive(Clone, Debug)]
pub struct FragmentIndex {
    patterns: Vec<Expr>,
}

impl FragmentIndex {
    pub fn new(ax: &AxiomSet) -> FragmentIndex {
        let mut patterns: Vec<Expr> = ax
            .rewrite_rules()
            .flat_map(|r| [r.lhs.clone(), r.rhs.clone()])
            .filter(|side| side.node_count() >= 2 && side.iter().any(|n| matches!(n, Expr::Const(_) | Expr::Unary(..))))
            .collect();
        patterns.sort();
        patterns.dedup();
        FragmentIndex { patterns }
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// True if some subterm strictly below a side root matches a pattern.
    pub fn contains_fragment(&self, eq: &Equation) -> bool {
        [&eq.lhs, &eq.rhs].into_iter().any(|side| {
            side.iter()
                .skip(1)
                .filter(|n| !n.is_leaf())
                .any(|n| self.patterns.iter().any(|p| match_pattern(p, n).is_some()))
        })
    }
}

pub fn composed_transcendental(eq: &Equation) -> usize {
    [&eq.lhs, &eq.rhs]
        .into_iter()
        .flat_map(|s| s.iter())
        .filter(|n| match n {
            Expr::Unary(op, arg) => {
                op.is_transcendental() && matches!(arg.as_ref(), Expr::Unary(inner, _) if inner.is_transcendental())
            }
            _ => false,
        })
        .count()
}

pub fn noninteger_power_of_transcendental(eq: &Equation) -> bool {
    [&eq.lhs, &eq.rhs].into_iter().flat_map(|s| s.iter()).any(|n| match n {
        Expr::Binary(BinaryOp::Pow, base, exponent) => {
            matches!(base.as_ref(), Expr::Unary(op, _) if op.is_transcendental())
                && !matches!(exponent.as_ref(), Expr::Const(c) if c.is_integer())
        }
        _ => false,
    })
}

pub fn extract_features(eq: &Equation, fragments: &FragmentIndex) -> FeatureVector {
    let nodes = || [&eq.lhs, &eq.rhs].into_iter().flat_map(|s| s.iter());
    FeatureVector {
        composed_transcendental: composed_transcendental(eq),
        noninteger_power_of_transcendental: noninteger_power_of_transcendental(eq),
        embedded_identity_fragment: fragments.contains_fragment(eq),
        node_count: eq.node_count(),
        depth: 1 + eq.lhs.depth().max(eq.rhs.depth()),
        constant_count: nodes().filter(|n| matches!(n, Expr::Const(_))).count(),
    }
}

/// True if `after` scores higher than `before` on the two artifact features.
pub fn introduces_artifact(before: &Equation, after: &Equation) -> bool {
    composed_transcendental(after) > composed_transcendental(before)
        || (noninteger_power_of_transcendental(after) && !noninteger_power_of_transcendental(before))
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum AuditError {
    #[error("insufficient-data: need at least {MIN_PER_CLASS} records per class, got {true_count} true and {false_count} false")]
    InsufficientData { true_count: usize, false_count: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    /// Predict true when the value is at least the threshold.
    Above,
    /// Predict true when the value is below the threshold.
    Below,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub threshold: f64,
    pub polarity: Polarity,
}

impl Stump {
    pub fn predict(&self, v: f64) -> bool {
        match self.polarity {
            Polarity::Above => v >= self.threshold,
            Polarity::Below => v < self.threshold,
        }
    }

    /// Best single-threshold split on `(value, label)` pairs. Ties keep the
    /// lowest threshold, `Above` first.
    pub fn fit(data: &[(f64, bool)]) -> Stump {
        let mut thresholds: Vec<f64> = data.iter().map(|d| d.0).collect();
        thresholds.sort_by(f64::total_cmp);
        thresholds.dedup();
        let mut best = Stump {
            threshold: f64::NEG_INFINITY,
            polarity: Polarity::Above,
        };
        let mut best_acc = best.accuracy(data);
        for &threshold in &thresholds {
            for polarity in [Polarity::Above, Polarity::Below] {
                let s = Stump { threshold, polarity };
                let acc = s.accuracy(data);
                if acc > best_acc {
                    best = s;
                    best_acc = acc;
                }
            }
        }
        best
    }

    pub fn accuracy(&self, data: &[(f64, bool)]) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        data.iter().filter(|(v, l)| self.predict(*v) == *l).count() as f64 / data.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureReport {
    pub name: String,
    pub mean_true: f64,
    pub mean_false: f64,
    /// Share of records with a nonzero value.
    pub nonzero_rate_true: f64,
    pub nonzero_rate_false: f64,
    pub stump: Stump,
    pub train_accuracy: f64,
    pub eval_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub true_count: usize,
    pub false_count: usize,
    pub train_size: usize,
    pub eval_size: usize,
    pub features: Vec<FeatureReport>,
    /// Held-out accuracy of the majority vote over all per-feature stumps.
    pub accuracy: f64,
    pub bound: f64,
    pub leaky: bool,
}

/// Fits one stump per feature on even-indexed records and scores the
/// majority vote on odd-indexed ones. A vote tie goes to the majority
/// label of the training split.
pub fn leakage_report(samples: &[(FeatureVector, bool)], bound: f64) -> Result<LeakageReport, AuditError> {
    let true_count = samples.iter().filter(|s| s.1).count();
    let false_count = samples.len() - true_count;
    if true_count < MIN_PER_CLASS || false_count < MIN_PER_CLASS {
        return Err(AuditError::InsufficientData { true_count, false_count });
    }
    let rows: Vec<([f64; 6], bool)> = samples.iter().map(|(f, l)| (f.values(), *l)).collect();
    let (train, eval): (Vec<_>, Vec<_>) = rows.iter().enumerate().partition(|(i, _)| i % 2 == 0);
    let train: Vec<&([f64; 6], bool)> = train.into_iter().map(|(_, r)| r).collect();
    let eval: Vec<&([f64; 6], bool)> = eval.into_iter().map(|(_, r)| r).collect();
    let train_majority = 2 * train.iter().filter(|r| r.1).count() >= train.len();

    let mean = |k: usize, label: bool| {
        let vals: Vec<f64> = rows.iter().filter(|r| r.1 == label).map(|r| r.0[k]).collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    };
    let nonzero = |k: usize, label: bool| {
        let n = rows.iter().filter(|r| r.1 == label).count();
        rows.iter().filter(|r| r.1 == label && r.0[k] != 0.0).count() as f64 / n as f64
    };

    let features: Vec<FeatureReport> = (0..FEATURE_NAMES.len())
        .map(|k| {
            let column = |split: &[&([f64; 6], bool)]| split.iter().map(|r| (r.0[k], r.1)).collect::<Vec<_>>();
            let tr = column(&train);
            let stump = Stump::fit(&tr);
            FeatureReport {
                name: FEATURE_NAMES[k].to_string(),
                mean_true: mean(k, true),
                mean_false: mean(k, false),
                nonzero_rate_true: nonzero(k, true),
                nonzero_rate_false: nonzero(k, false),
                stump,
                train_accuracy: stump.accuracy(&tr),
                eval_accuracy: stump.accuracy(&column(&eval)),
            }
        })
        .collect();

    let correct = eval
        .iter()
        .filter(|(values, label)| {
            let votes = features.iter().zip(values).filter(|(f, v)| f.stump.predict(**v)).count();
            let predicted = match (2 * votes).cmp(&features.len()) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => train_majority,
            };
            predicted == *label
        })
        .count();
    let accuracy = correct as f64 / eval.len() as f64;
    Ok(LeakageReport {
        true_count,
        false_count,
        train_size: train.len(),
        eval_size: eval.len(),
        features,
        accuracy,
        bound,
        leaky: accuracy > bound,
    })
}

impl fmt::Display for LeakageReport {
    /// `key=value` lines.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "true_count={}", self.true_count)?;
        writeln!(f, "false_count={}", self.false_count)?;
        writeln!(f, "train_size={}", self.train_size)?;
        writeln!(f, "eval_size={}", self.eval_size)?;
        for r in &self.features {
            let n = &r.name;
            writeln!(f, "{n}.mean_true={:.4}", r.mean_true)?;
            writeln!(f, "{n}.mean_false={:.4}", r.mean_false)?;
            writeln!(f, "{n}.nonzero_rate_true={:.4}", r.nonzero_rate_true)?;
            writeln!(f, "{n}.nonzero_rate_false={:.4}", r.nonzero_rate_false)?;
            writeln!(f, "{n}.eval_accuracy={:.4}", r.eval_accuracy)?;
        }
        writeln!(f, "accuracy={:.4}", self.accuracy)?;
        writeln!(f, "bound={}", self.bound)?;
        write!(f, "leaky={}", self.leaky)
    }
}
