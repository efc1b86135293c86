//! Term-rewriting generator and random-evaluation verifier for labeled
//! symbolic equation datasets.

pub mod audit;
pub mod axioms;
pub mod cli;
pub mod config;
pub mod corrupt;
pub mod eval;
pub mod expr;
pub mod oracle;
pub mod parse;
pub mod random;
pub mod record;
pub mod rewrite;
pub mod truegen;

pub use audit::{extract_features, leakage_report, FeatureVector, LeakageReport};
pub use axioms::{curated_axiom_set, load_axioms, AxiomSet, RewriteRule, Tag, ValidationReport};
pub use corrupt::{generate_false, FalseGenConfig, MutationKind};
pub use eval::{evaluate, Env, EvalResult};
pub use expr::{BinaryOp, Constant, Decimal, Equation, Expr, Path, Side, Symbol, UnaryOp, Var};
pub use oracle::{verify, OracleConfig, Outcome, ToleranceMode, Verdict};
pub use parse::{parse_equation, parse_expr, ParseError};
pub use record::{generate_dataset, replay, DatasetConfig, DatasetRecord};
pub use rewrite::{apply_rewrite, applicable_rewrites, instantiate_axiom, match_pattern, substitute, Direction, RewriteStep, Substitution};
pub use truegen::{generate_true, TrueGenConfig};
