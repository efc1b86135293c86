//! Rewrite-rule corpus: axiom file parsing, numerical validation and the
//! curated default set.
//!
//! Axiom files hold one rule per line:
//!
//! ```text
//! [optional-id] <lhs> == <rhs> @tag @tag   # comment
//! ```
//!
//! Sides are prefix expressions; every variable is a pattern variable. Rules
//! without an explicit id get `<source>-<nn>` where `nn` counts rule lines
//! from 1. A rule enters an [`AxiomSet`] only after [`validate_axiom`] finds
//! it sound.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::OnceLock;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::expr::{Equation, Expr};
use crate::oracle::{verify, OracleConfig, Outcome, ToleranceMode, Verdict, SAMPLE_BOUND};
use crate::parse::{parse_expr, ParseError};
use crate::random::{derive_seed, rng_from_seed, stable_hash};

pub const BASIC: &str = include_str!("../axioms/basic.ax");
pub const TRIG: &str = include_str!("../axioms/trig.ax");
pub const AUGMENT: &str = include_str!("../axioms/augment.ax");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tag {
    Algebraic,
    Trigonometric,
    Augmented,
    PureIdentity,
    /// Holds only on part of the real domain (e.g. nonnegative bases);
    /// generators check each instance before using it.
    Conditional,
}

impl Tag {
    pub fn name(self) -> &'static str {
        match self {
            Tag::Algebraic => "algebraic",
            Tag::Trigonometric => "trigonometric",
            Tag::Augmented => "augmented",
            Tag::PureIdentity => "pure-identity",
            Tag::Conditional => "conditional",
        }
    }

    pub fn from_name(name: &str) -> Option<Tag> {
        [
            Tag::Algebraic,
            Tag::Trigonometric,
            Tag::Augmented,
            Tag::PureIdentity,
            Tag::Conditional,
        ]
        .into_iter()
        .find(|t| t.name() == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RewriteRule {
    pub id: String,
    pub lhs: Expr,
    pub rhs: Expr,
    pub tags: BTreeSet<Tag>,
}

impl RewriteRule {
    /// Builds a rule with inferred tags: trigonometric if either side uses
    /// a trigonometric or hyperbolic operator, algebraic otherwise, and
    /// pure-identity when both sides are the same.
    pub fn new(id: impl Into<String>, lhs: Expr, rhs: Expr) -> RewriteRule {
        RewriteRule::with_tags(id, lhs, rhs, BTreeSet::new())
    }

    pub fn with_tags(id: impl Into<String>, lhs: Expr, rhs: Expr, mut tags: BTreeSet<Tag>) -> RewriteRule {
        if !tags.contains(&Tag::Algebraic) && !tags.contains(&Tag::Trigonometric) {
            let trig = lhs.iter().chain(rhs.iter()).any(|n| match n {
                Expr::Unary(op, _) => op.is_trigonometric(),
                _ => false,
            });
            tags.insert(if trig { Tag::Trigonometric } else { Tag::Algebraic });
        }
        if lhs == rhs {
            tags.insert(Tag::PureIdentity);
        }
        RewriteRule {
            id: id.into(),
            lhs,
            rhs,
            tags,
        }
    }

    pub fn has_tag(&self, tag: Tag) -> bool {
        self.tags.contains(&tag)
    }

    pub fn is_pure_identity(&self) -> bool {
        self.has_tag(Tag::PureIdentity)
    }

    pub fn is_conditional(&self) -> bool {
        self.has_tag(Tag::Conditional)
    }

    pub fn as_equation(&self) -> Equation {
        Equation::new(self.lhs.clone(), self.rhs.clone())
    }

    /// Line in axiom-file syntax, with explicit id and tags.
    pub fn to_line(&self) -> String {
        let mut line = format!("[{}] {} == {}", self.id, self.lhs, self.rhs);
        for tag in &self.tags {
            line.push_str(" @");
            line.push_str(tag.name());
        }
        line
    }
}

impl fmt::Display for RewriteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

/// Validated rules with unique ids.
#[derive(Clone, Debug)]
pub struct AxiomSet {
    rules: Vec<RewriteRule>,
    provenance: String,
    index: HashMap<String, usize>,
    // non-pure rules sorted by id
    rewrite_order: Vec<usize>,
}

impl AxiomSet {
    /// Builds a set without validation. Later duplicates of an id are dropped.
    pub fn from_rules_unchecked(rules: Vec<RewriteRule>, provenance: impl Into<String>) -> AxiomSet {
        let mut kept: Vec<RewriteRule> = Vec::with_capacity(rules.len());
        let mut index = HashMap::new();
        for rule in rules {
            if index.contains_key(&rule.id) {
                continue;
            }
            index.insert(rule.id.clone(), kept.len());
            kept.push(rule);
        }
        let mut rewrite_order: Vec<usize> = (0..kept.len())
            .filter(|&i| !kept[i].is_pure_identity())
            .collect();
        rewrite_order.sort_by(|&a, &b| kept[a].id.cmp(&kept[b].id));
        AxiomSet {
            rules: kept,
            provenance: provenance.into(),
            index,
            rewrite_order,
        }
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&RewriteRule> {
        self.index.get(id).map(|&i| &self.rules[i])
    }

    /// Rules eligible for rewriting (pure identities excluded), by id.
    pub fn rewrite_rules(&self) -> impl Iterator<Item = &RewriteRule> {
        self.rewrite_order.iter().map(|&i| &self.rules[i])
    }

    pub fn find_by_sides(&self, lhs: &Expr, rhs: &Expr) -> Option<&RewriteRule> {
        self.rules.iter().find(|r| &r.lhs == lhs && &r.rhs == rhs)
    }

    /// Axiom-file text that loads back to the same rules.
    pub fn to_axiom_file(&self) -> String {
        let mut out = format!("# {}\n", self.provenance);
        for r in &self.rules {
            out.push_str(&r.to_line());
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum AxiomFileError {
    #[error("{source_name}:{line}: {error}")]
    Parse {
        source_name: String,
        line: usize,
        error: ParseError,
    },
    #[error("{source_name}:{line}: expected `<lhs> == <rhs>`")]
    MissingEquals { source_name: String, line: usize },
    #[error("{source_name}:{line}: unknown tag `@{tag}`")]
    UnknownTag {
        source_name: String,
        line: usize,
        tag: String,
    },
    #[error("{source_name}:{line}: rule id `{id}` already used")]
    DuplicateId {
        source_name: String,
        line: usize,
        id: String,
    },
}

/// A rule as read from a file, before validation.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedRule {
    pub rule: RewriteRule,
    pub source_name: String,
    pub line: usize,
    pub text: String,
}

/// Parses axiom-file text. `source_name` prefixes generated ids.
pub fn parse_axiom_file(source_name: &str, text: &str) -> Result<Vec<ParsedRule>, AxiomFileError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (id, body) = match body.strip_prefix('[').and_then(|rest| rest.split_once(']')) {
            Some((id, rest)) => (Some(id.trim().to_string()), rest.trim()),
            None => (None, body),
        };
        let mut tags = BTreeSet::new();
        let mut eq_part = body;
        while let Some(at) = eq_part.rfind(" @") {
            let name = eq_part[at + 2..].trim();
            let tag = Tag::from_name(name).ok_or_else(|| AxiomFileError::UnknownTag {
                source_name: source_name.to_string(),
                line: line_no,
                tag: name.to_string(),
            })?;
            tags.insert(tag);
            eq_part = eq_part[..at].trim_end();
        }
        let (lhs_text, rhs_text) = split_on_equals(eq_part).ok_or_else(|| AxiomFileError::MissingEquals {
            source_name: source_name.to_string(),
            line: line_no,
        })?;
        let parse = |t: &str| {
            parse_expr(t).map_err(|error| AxiomFileError::Parse {
                source_name: source_name.to_string(),
                line: line_no,
                error,
            })
        };
        let lhs = parse(lhs_text)?;
        let rhs = parse(rhs_text)?;
        let id = id.unwrap_or_else(|| format!("{source_name}-{:02}", out.len() + 1));
        out.push(ParsedRule {
            rule: RewriteRule::with_tags(id, lhs, rhs, tags),
            source_name: source_name.to_string(),
            line: line_no,
            text: raw.trim().to_string(),
        });
    }
    Ok(out)
}

fn split_on_equals(s: &str) -> Option<(&str, &str)> {
    s.split_once("==").map(|(l, r)| (l.trim(), r.trim()))
}

/// Oracle settings for admitting rules: tight relative threshold and twenty
/// jointly defined samples.
pub fn validation_config() -> OracleConfig {
    OracleConfig {
        epsilon: 1e-9,
        trials: 20,
        interval: (-SAMPLE_BOUND, SAMPLE_BOUND),
        min_valid_samples: 20,
        resample_limit: 64,
        tolerance_mode: ToleranceMode::RelativeWithFloor,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Soundness {
    Sound,
    Unsound,
    Unknown,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuleVerdict {
    pub soundness: Soundness,
    /// One side was defined on samples where the other never was.
    pub domain_mismatch: bool,
    pub verdict: Verdict,
}

/// Checks one rule with the oracle. A rule whose sides are never jointly
/// defined while one of them is defined on sampled points is unsound as a
/// rewrite, since it maps a defined term to an undefined one.
pub fn validate_axiom<R: Rng + ?Sized>(rule: &RewriteRule, cfg: &OracleConfig, rng: &mut R) -> RuleVerdict {
    let verdict = verify(&rule.as_equation(), cfg, rng);
    let (soundness, domain_mismatch) = match verdict.outcome {
        Outcome::True => (Soundness::Sound, false),
        Outcome::False => (Soundness::Unsound, false),
        Outcome::Unknown if verdict.valid_samples() == 0 && verdict.one_sided > 0 => {
            (Soundness::Unsound, true)
        }
        Outcome::Unknown => (Soundness::Unknown, false),
    };
    RuleVerdict {
        soundness,
        domain_mismatch,
        verdict,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RuleStatus {
    Admitted,
    /// Admitted but never selected for rewriting.
    AdmittedInert,
    RejectedUnsound { max_deviation: f64 },
    RejectedDomainMismatch { one_sided: usize },
    RejectedUnknown { valid_samples: usize },
    RejectedDuplicate { of: String },
}

impl RuleStatus {
    pub fn is_admitted(&self) -> bool {
        matches!(self, RuleStatus::Admitted | RuleStatus::AdmittedInert)
    }
}

impl fmt::Display for RuleStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleStatus::Admitted => write!(f, "admitted"),
            RuleStatus::AdmittedInert => write!(f, "admitted (pure identity, inert)"),
            RuleStatus::RejectedUnsound { max_deviation } => {
                write!(f, "rejected: unsound (deviation {max_deviation:.3e})")
            }
            RuleStatus::RejectedDomainMismatch { one_sided } => write!(
                f,
                "rejected: unsound (sides never jointly defined; one side defined on {one_sided} draws)"
            ),
            RuleStatus::RejectedUnknown { valid_samples } => {
                write!(f, "rejected: undetermined ({valid_samples} valid samples)")
            }
            RuleStatus::RejectedDuplicate { of } => write!(f, "rejected: duplicate of {of}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleReport {
    pub id: String,
    pub source: String,
    pub line: usize,
    pub text: String,
    #[serde(flatten)]
    pub status: RuleStatus,
    pub samples: usize,
    pub max_deviation: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub entries: Vec<RuleReport>,
}

impl ValidationReport {
    pub fn get(&self, id: &str) -> Option<&RuleReport> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn admitted(&self) -> impl Iterator<Item = &RuleReport> {
        self.entries.iter().filter(|e| e.status.is_admitted())
    }

    pub fn rejected(&self) -> impl Iterator<Item = &RuleReport> {
        self.entries.iter().filter(|e| !e.status.is_admitted())
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{:<16} {:<16} {}", e.id, format!("{}:{}", e.source, e.line), e.status)?;
        }
        let admitted = self.admitted().count();
        write!(
            f,
            "{} rules: {} admitted, {} rejected",
            self.entries.len(),
            admitted,
            self.entries.len() - admitted
        )
    }
}

/// Parses, deduplicates and validates rules from several sources. Each rule
/// is validated on its own RNG stream keyed by `seed` and its id, so the
/// outcome does not depend on order or thread count.
pub fn load_axiom_sources(
    sources: &[(&str, &str)],
    cfg: &OracleConfig,
    seed: u64,
) -> Result<(AxiomSet, ValidationReport), AxiomFileError> {
    let mut parsed = Vec::new();
    for (name, text) in sources {
        parsed.extend(parse_axiom_file(name, text)?);
    }

    let mut ids = HashMap::new();
    let mut first_by_sides: HashMap<(&Expr, &Expr), &str> = HashMap::new();
    let mut duplicate_of: Vec<Option<String>> = Vec::with_capacity(parsed.len());
    for p in &parsed {
        if ids.insert(p.rule.id.as_str(), ()).is_some() {
            return Err(AxiomFileError::DuplicateId {
                source_name: p.source_name.clone(),
                line: p.line,
                id: p.rule.id.clone(),
            });
        }
        let key = (&p.rule.lhs, &p.rule.rhs);
        match first_by_sides.get(&key) {
            Some(first) => duplicate_of.push(Some(first.to_string())),
            None => {
                first_by_sides.insert(key, &p.rule.id);
                duplicate_of.push(None);
            }
        }
    }

    let verdicts: Vec<Option<RuleVerdict>> = parsed
        .par_iter()
        .zip(duplicate_of.par_iter())
        .map(|(p, dup)| {
            dup.is_none().then(|| {
                let mut rng = rng_from_seed(derive_seed(seed, stable_hash(&p.rule.id)));
                validate_axiom(&p.rule, cfg, &mut rng)
            })
        })
        .collect();

    let mut admitted = Vec::new();
    let mut report = ValidationReport::default();
    for ((p, dup), verdict) in parsed.into_iter().zip(duplicate_of).zip(verdicts) {
        let (status, samples, max_deviation) = match (dup, verdict) {
            (Some(of), _) => (RuleStatus::RejectedDuplicate { of }, 0, 0.0),
            (None, Some(v)) => {
                let samples = v.verdict.valid_samples();
                let dev = v.verdict.max_deviation();
                let status = match v.soundness {
                    Soundness::Sound if p.rule.is_pure_identity() => RuleStatus::AdmittedInert,
                    Soundness::Sound => RuleStatus::Admitted,
                    Soundness::Unsound if v.domain_mismatch => RuleStatus::RejectedDomainMismatch {
                        one_sided: v.verdict.one_sided,
                    },
                    Soundness::Unsound => RuleStatus::RejectedUnsound { max_deviation: dev },
                    Soundness::Unknown => RuleStatus::RejectedUnknown { valid_samples: samples },
                };
                (status, samples, dev)
            }
            (None, None) => unreachable!("every non-duplicate rule is validated"),
        };
        if status.is_admitted() {
            admitted.push(p.rule.clone());
        }
        report.entries.push(RuleReport {
            id: p.rule.id,
            source: p.source_name,
            line: p.line,
            text: p.text,
            status,
            samples,
            max_deviation,
        });
    }
    let provenance = sources
        .iter()
        .map(|(n, _)| *n)
        .collect::<Vec<_>>()
        .join("+");
    Ok((AxiomSet::from_rules_unchecked(admitted, provenance), report))
}

/// Loads one axiom file with the default validation settings.
pub fn load_axioms(source_name: &str, text: &str) -> Result<(AxiomSet, ValidationReport), AxiomFileError> {
    load_axiom_sources(&[(source_name, text)], &validation_config(), 0)
}

/// The shipped sources: the 66 algebraic equations, the trigonometric
/// identities and the augmentations.
pub fn curated_sources() -> [(&'static str, &'static str); 3] {
    [("basic", BASIC), ("trig", TRIG), ("augment", AUGMENT)]
}

/// The default rule set. Validated once per process.
pub fn curated_axiom_set() -> AxiomSet {
    curated().0.clone()
}

/// Validation report for [`curated_axiom_set`].
pub fn curated_report() -> ValidationReport {
    curated().1.clone()
}

fn curated() -> &'static (AxiomSet, ValidationReport) {
    static CURATED: OnceLock<(AxiomSet, ValidationReport)> = OnceLock::new();
    CURATED.get_or_init(|| {
        load_axiom_sources(&curated_sources(), &validation_config(), 0)
            .expect("shipped axiom files parse")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_expr;

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn first_basic_line_is_admitted_as_algebraic() {
        let (set, report) = load_axioms("basic", BASIC).unwrap();
        let r = set.get("basic-01").unwrap();
        assert_eq!(r.lhs, p("(+ 1 1)"));
        assert!(r.has_tag(Tag::Algebraic));
        assert_eq!(report.get("basic-01").unwrap().status, RuleStatus::Admitted);
    }

    #[test]
    fn repeated_line_is_admitted_once() {
        let (set, report) = load_axioms("basic", BASIC).unwrap();
        assert!(set.get("basic-11").is_some());
        assert!(set.get("basic-18").is_none());
        assert_eq!(
            report.get("basic-18").unwrap().status,
            RuleStatus::RejectedDuplicate {
                of: "basic-11".into()
            }
        );
    }

    #[test]
    fn false_subtraction_line_is_rejected() {
        let (set, report) = load_axioms("basic", BASIC).unwrap();
        assert!(set.get("basic-24").is_none());
        match &report.get("basic-24").unwrap().status {
            RuleStatus::RejectedUnsound { max_deviation } => {
                // |3 - 2| / max(1, 3, 2)
                assert!((max_deviation - 1.0 / 3.0).abs() < 1e-15);
            }
            other => panic!("unexpected status {other:?}"),
        }
    }

    #[test]
    fn pure_identities_are_inert() {
        let (set, report) = load_axioms("basic", BASIC).unwrap();
        let r = set.get("basic-57").unwrap();
        assert!(r.is_pure_identity());
        assert_eq!(report.get("basic-57").unwrap().status, RuleStatus::AdmittedInert);
        assert!(set.rewrite_rules().all(|r| !r.is_pure_identity()));
    }

    #[test]
    fn validate_examples() {
        let cfg = validation_config();
        let mut rng = rng_from_seed(11);
        let comm = RewriteRule::new("c", p("(+ x y)"), p("(+ y x)"));
        assert_eq!(validate_axiom(&comm, &cfg, &mut rng).soundness, Soundness::Sound);
        let pow0 = RewriteRule::new("p", p("(pow x 0)"), p("1"));
        assert_eq!(validate_axiom(&pow0, &cfg, &mut rng).soundness, Soundness::Sound);
        let wrong = RewriteRule::new("w", p("(sin (* 2 x))"), p("(* 2 (sin x))"));
        assert_eq!(validate_axiom(&wrong, &cfg, &mut rng).soundness, Soundness::Unsound);
        let nowhere = RewriteRule::new("n", p("(acosh (neg (pow x 2)))"), p("(asin (+ 2 (pow x 2)))"));
        assert_eq!(validate_axiom(&nowhere, &cfg, &mut rng).soundness, Soundness::Unknown);
    }

    #[test]
    fn file_syntax() {
        let text = "# comment\n\n[my-id] (+ x 0) == x @augmented # trailing\n(sin x) == (sin x)\n";
        let rules = parse_axiom_file("f", text).unwrap();
        assert_eq!(rules.len(), 2);
        assert_eq!(rules[0].rule.id, "my-id");
        assert_eq!(rules[0].line, 3);
        assert!(rules[0].rule.has_tag(Tag::Augmented));
        assert!(rules[0].rule.has_tag(Tag::Algebraic));
        assert_eq!(rules[1].rule.id, "f-02");
        assert!(rules[1].rule.has_tag(Tag::Trigonometric));
        assert!(rules[1].rule.is_pure_identity());
    }

    #[test]
    fn file_errors_carry_line_numbers() {
        let err = parse_axiom_file("f", "(+ 1 1) == 2\n(+ 1 == 2\n").unwrap_err();
        assert!(matches!(err, AxiomFileError::Parse { line: 2, .. }), "{err}");
        let err = parse_axiom_file("f", "\n(+ 1 1) 2\n").unwrap_err();
        assert!(matches!(err, AxiomFileError::MissingEquals { line: 2, .. }));
        let err = parse_axiom_file("f", "1 == 1 @bogus\n").unwrap_err();
        assert!(matches!(err, AxiomFileError::UnknownTag { line: 1, .. }));
        let err = load_axioms("f", "[a] 1 == 1\n[a] 2 == 2\n").unwrap_err();
        assert!(matches!(err, AxiomFileError::DuplicateId { line: 2, .. }));
    }

    #[test]
    fn curated_set_contents() {
        let set = curated_axiom_set();
        assert!(set.find_by_sides(&p("(* x (+ y z))"), &p("(+ (* x y) (* x z))")).is_some());
        assert!(set.find_by_sides(&p("(pow (pow x y) z)"), &p("(pow x (* y z))")).is_some());
        assert!(set
            .find_by_sides(&p("(+ (pow (sin x) 2) (pow (cos x) 2))"), &p("1"))
            .is_some());
        assert!(set
            .find_by_sides(&p("(* (pow x y) (pow x z))"), &p("(pow x (+ y z))"))
            .is_some());
        let report = curated_report();
        let trig_rejects: Vec<_> = report
            .rejected()
            .filter(|e| e.source != "basic")
            .collect();
        assert!(trig_rejects.is_empty(), "{trig_rejects:?}");
    }

    #[test]
    fn curated_set_is_deterministic() {
        let a = load_axiom_sources(&curated_sources(), &validation_config(), 0).unwrap();
        let b = load_axiom_sources(&curated_sources(), &validation_config(), 0).unwrap();
        let ids = |s: &AxiomSet| s.rules().iter().map(|r| r.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&a.0), ids(&b.0));
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn serialized_set_loads_back_identically() {
        let set = curated_axiom_set();
        let text = set.to_axiom_file();
        let (again, report) = load_axioms("reloaded", &text).unwrap();
        assert_eq!(again.rules(), set.rules());
        assert_eq!(report.rejected().count(), 0);
    }
}
