//! Nonlinear pattern matching, simultaneous substitution and
//! position-indexed rule application.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::axioms::{AxiomSet, RewriteRule};
use crate::expr::{Equation, Expr, InvalidPath, Path, Var};

/// Pattern variable bindings. Each variable is bound at most once, to any
/// expression.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Substitution(BTreeMap<Var, Expr>);

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    pub fn get(&self, var: Var) -> Option<&Expr> {
        self.0.get(&var)
    }

    /// Binds `var`, returning `false` (and leaving the binding alone) if it
    /// was already bound to something else.
    pub fn bind(&mut self, var: Var, value: Expr) -> bool {
        match self.0.get(&var) {
            Some(existing) => *existing == value,
            None => {
                self.0.insert(var, value);
                true
            }
        }
    }

    pub fn insert(&mut self, var: Var, value: Expr) -> Option<Expr> {
        self.0.insert(var, value)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, &Expr)> {
        self.0.iter().map(|(v, e)| (*v, e))
    }

    /// True when the two agree on every variable they both bind.
    pub fn agrees_with(&self, other: &Substitution) -> bool {
        self.0
            .iter()
            .all(|(v, e)| other.get(*v).is_none_or(|o| o == e))
    }

    /// Bindings of `self` plus those of `other` for variables `self` leaves
    /// free.
    pub fn extended_by(mut self, other: &Substitution) -> Substitution {
        for (v, e) in other.iter() {
            self.0.entry(v).or_insert_with(|| e.clone());
        }
        self
    }
}

impl FromIterator<(Var, Expr)> for Substitution {
    fn from_iter<T: IntoIterator<Item = (Var, Expr)>>(iter: T) -> Self {
        Substitution(iter.into_iter().collect())
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, e)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v} -> {e}")?;
        }
        write!(f, "}}")
    }
}

/// Matches `pattern` against `subject`; every variable in the pattern is a
/// pattern variable and repeated variables must bind equal subtrees.
pub fn match_pattern(pattern: &Expr, subject: &Expr) -> Option<Substitution> {
    let mut sigma = Substitution::new();
    match_into(pattern, subject, &mut sigma).then_some(sigma)
}

fn match_into(pattern: &Expr, subject: &Expr, sigma: &mut Substitution) -> bool {
    match (pattern, subject) {
        (Expr::Var(v), _) => sigma.bind(*v, subject.clone()),
        (Expr::Const(a), Expr::Const(b)) => a == b,
        (Expr::Unary(op, a), Expr::Unary(op2, b)) => op == op2 && match_into(a, b, sigma),
        (Expr::Binary(op, a1, a2), Expr::Binary(op2, b1, b2)) => {
            op == op2 && match_into(a1, b1, sigma) && match_into(a2, b2, sigma)
        }
        _ => false,
    }
}

/// Replaces every occurrence of every bound variable at once. Unbound
/// variables are left as they are.
pub fn substitute(e: &Expr, sigma: &Substitution) -> Expr {
    if sigma.is_empty() {
        return e.clone();
    }
    match e {
        Expr::Var(v) => sigma.get(*v).cloned().unwrap_or_else(|| e.clone()),
        Expr::Const(_) => e.clone(),
        Expr::Unary(op, a) => Expr::unary(*op, substitute(a, sigma)),
        Expr::Binary(op, a, b) => Expr::binary(*op, substitute(a, sigma), substitute(b, sigma)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    LhsToRhs,
    RhsToLhs,
}

impl Direction {
    pub fn reversed(self) -> Direction {
        match self {
            Direction::LhsToRhs => Direction::RhsToLhs,
            Direction::RhsToLhs => Direction::LhsToRhs,
        }
    }

    /// `(from, to)` sides of `rule` in this direction.
    pub fn orient(self, rule: &RewriteRule) -> (&Expr, &Expr) {
        match self {
            Direction::LhsToRhs => (&rule.lhs, &rule.rhs),
            Direction::RhsToLhs => (&rule.rhs, &rule.lhs),
        }
    }
}

/// One application of a rule at an equation position. The path's first
/// index selects the side.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RewriteStep {
    pub rule_id: String,
    pub direction: Direction,
    pub path: Path,
    pub substitution: Substitution,
}

impl RewriteStep {
    /// The step that undoes this one: same rule, path and bindings, opposite
    /// direction.
    pub fn inverse(&self) -> RewriteStep {
        RewriteStep {
            direction: self.direction.reversed(),
            ..self.clone()
        }
    }

    pub fn is_inverse_of(&self, other: &RewriteStep) -> bool {
        self.rule_id == other.rule_id
            && self.path == other.path
            && self.direction == other.direction.reversed()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error(transparent)]
    InvalidPath(#[from] InvalidPath),
    #[error("step {rule} at {path} no longer matches")]
    StaleStep { rule: String, path: Path },
}

/// Every `(rule, direction, path)` whose source pattern matches, ordered by
/// side, pre-order path, rule id, then direction. Pure identities are skipped.
pub fn applicable_rewrites(eq: &Equation, ax: &AxiomSet) -> Vec<RewriteStep> {
    let rules: Vec<&RewriteRule> = ax.rewrite_rules().collect();
    let mut steps = Vec::new();
    for (path, subject) in eq.positions() {
        for rule in &rules {
            for direction in [Direction::LhsToRhs, Direction::RhsToLhs] {
                let (from, _) = direction.orient(rule);
                if let Some(substitution) = match_pattern(from, &subject) {
                    steps.push(RewriteStep {
                        rule_id: rule.id.clone(),
                        direction,
                        path: path.clone(),
                        substitution,
                    });
                }
            }
        }
    }
    steps
}

/// Applies `step`. The recorded substitution must agree with the match at
/// the step's position; its extra bindings instantiate variables that occur
/// only on the target side.
pub fn apply_rewrite(eq: &Equation, step: &RewriteStep, ax: &AxiomSet) -> Result<Equation, RewriteError> {
    let rule = ax
        .get(&step.rule_id)
        .ok_or_else(|| RewriteError::UnknownRule(step.rule_id.clone()))?;
    apply_rule(eq, step, rule)
}

/// [`apply_rewrite`] with the rule already resolved.
pub fn apply_rule(eq: &Equation, step: &RewriteStep, rule: &RewriteRule) -> Result<Equation, RewriteError> {
    let stale = || RewriteError::StaleStep {
        rule: step.rule_id.clone(),
        path: step.path.clone(),
    };
    let subject = eq
        .subterm(&step.path)
        .ok_or_else(|| InvalidPath(step.path.clone()))?;
    let (from, to) = step.direction.orient(rule);
    let matched = match_pattern(from, subject).ok_or_else(stale)?;
    if !matched.agrees_with(&step.substitution) {
        return Err(stale());
    }
    let replacement = substitute(to, &matched.extended_by(&step.substitution));
    Ok(eq.replace_at(&step.path, replacement)?)
}

/// `substitute(lhs) == substitute(rhs)` for the rule.
pub fn instantiate_axiom(rule: &RewriteRule, sigma: &Substitution) -> Equation {
    Equation::new(substitute(&rule.lhs, sigma), substitute(&rule.rhs, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::{curated_axiom_set, AxiomSet, RewriteRule};
    use crate::parse::{parse_equation, parse_expr};

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    fn single(id: &str, lhs: &str, rhs: &str) -> AxiomSet {
        AxiomSet::from_rules_unchecked(vec![RewriteRule::new(id, p(lhs), p(rhs))], "test")
    }

    #[test]
    fn commutativity_matches_pythagorean_side() {
        let s = match_pattern(&p("(+ x y)"), &p("(+ (pow (cos x) 2) (pow (sin x) 2))")).unwrap();
        assert_eq!(s.get(Var::X), Some(&p("(pow (cos x) 2)")));
        assert_eq!(s.get(Var::Y), Some(&p("(pow (sin x) 2)")));
    }

    #[test]
    fn nonlinear_matching() {
        assert_eq!(match_pattern(&p("(+ x x)"), &p("(+ 1 2)")), None);
        let s = match_pattern(&p("(+ x x)"), &p("(+ (sin y) (sin y))")).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.get(Var::X), Some(&p("(sin y)")));
    }

    #[test]
    fn constants_and_ops_must_agree() {
        assert!(match_pattern(&p("(pow x 0)"), &p("(pow y 0)")).is_some());
        assert!(match_pattern(&p("(pow x 0)"), &p("(pow y 1)")).is_none());
        assert!(match_pattern(&p("(sin x)"), &p("(cos x)")).is_none());
        assert!(match_pattern(&p("(const 1/2)"), &p("(dec 50)")).is_none());
    }

    #[test]
    fn substitution_is_simultaneous() {
        let sigma: Substitution = [(Var::X, p("2")), (Var::Y, p("pi"))].into_iter().collect();
        assert_eq!(substitute(&p("(+ x y)"), &sigma), p("(+ 2 pi)"));
        assert_eq!(substitute(&p("(+ y x)"), &sigma), p("(+ pi 2)"));
        // x -> y and y -> x at once, not one after the other
        let swap: Substitution = [(Var::X, p("y")), (Var::Y, p("x"))].into_iter().collect();
        assert_eq!(substitute(&p("(* x y)"), &swap), p("(* y x)"));
        let rep: Substitution = [(Var::X, p("(sin z)"))].into_iter().collect();
        assert_eq!(substitute(&p("(+ x x)"), &rep), p("(+ (sin z) (sin z))"));
        let e = p("(+ x (cos y))");
        assert_eq!(substitute(&e, &Substitution::new()), e);
    }

    #[test]
    fn instantiate_commutativity_with_constants() {
        let rule = RewriteRule::new("comm", p("(+ x y)"), p("(+ y x)"));
        let sigma: Substitution = [(Var::X, p("2")), (Var::Y, p("pi"))].into_iter().collect();
        assert_eq!(instantiate_axiom(&rule, &sigma).to_string(), "(= (+ 2 pi) (+ pi 2))");
        let ident: Substitution = Var::ALL.iter().map(|&v| (v, Expr::Var(v))).collect();
        assert_eq!(
            instantiate_axiom(&rule, &ident),
            Equation::new(rule.lhs.clone(), rule.rhs.clone())
        );
    }

    #[test]
    fn commutativity_step_on_pythagorean_equation() {
        let ax = single("comm", "(+ x y)", "(+ y x)");
        let eq = parse_equation("(= (+ (pow (cos x) 2) (pow (sin x) 2)) 1)").unwrap();
        let steps = applicable_rewrites(&eq, &ax);
        let root = steps
            .iter()
            .find(|s| s.path == Path(vec![0]) && s.direction == Direction::LhsToRhs)
            .unwrap();
        let out = apply_rewrite(&eq, root, &ax).unwrap();
        assert_eq!(out.to_string(), "(= (+ (pow (sin x) 2) (pow (cos x) 2)) 1)");
    }

    #[test]
    fn no_steps_on_leaf_equation_for_commutativity() {
        let ax = single("comm", "(+ x y)", "(+ y x)");
        assert!(applicable_rewrites(&parse_equation("(= 0 0)").unwrap(), &ax).is_empty());
    }

    #[test]
    fn pythagorean_expansion_of_one_and_back() {
        let ax = curated_axiom_set();
        let eq = parse_equation("(= (+ 1 2) 3)").unwrap();
        let pyth = ax.find_by_sides(&p("(+ (pow (sin x) 2) (pow (cos x) 2))"), &p("1")).unwrap();
        let step = applicable_rewrites(&eq, &ax)
            .into_iter()
            .find(|s| {
                s.rule_id == pyth.id && s.direction == Direction::RhsToLhs && s.path == Path(vec![0, 0])
            })
            .expect("1 -> sin^2 x + cos^2 x is applicable");
        let out = apply_rewrite(&eq, &step, &ax).unwrap();
        assert_eq!(
            out.to_string(),
            "(= (+ (+ (pow (sin x) 2) (pow (cos x) 2)) 2) 3)"
        );
        let back = apply_rewrite(&out, &step.inverse(), &ax).unwrap();
        assert_eq!(back, eq);
    }

    #[test]
    fn inverse_restores_erased_bindings() {
        let ax = single("pow0", "(pow x 0)", "1");
        let eq = parse_equation("(= (pow (sin y) 0) 1)").unwrap();
        let step = applicable_rewrites(&eq, &ax)
            .into_iter()
            .find(|s| s.path == Path(vec![0]))
            .unwrap();
        let out = apply_rewrite(&eq, &step, &ax).unwrap();
        assert_eq!(out.to_string(), "(= 1 1)");
        assert_eq!(apply_rewrite(&out, &step.inverse(), &ax).unwrap(), eq);
    }

    #[test]
    fn stale_and_invalid_steps() {
        let ax = single("comm", "(+ x y)", "(+ y x)");
        let eq = parse_equation("(= (+ 1 2) 3)").unwrap();
        let step = applicable_rewrites(&eq, &ax).remove(0);
        let other = parse_equation("(= (* 1 2) 3)").unwrap();
        assert!(matches!(
            apply_rewrite(&other, &step, &ax),
            Err(RewriteError::StaleStep { .. })
        ));
        let mut moved = step.clone();
        moved.path = Path(vec![0, 5]);
        assert!(matches!(
            apply_rewrite(&eq, &moved, &ax),
            Err(RewriteError::InvalidPath(_))
        ));
        let mut unknown = step.clone();
        unknown.rule_id = "nope".into();
        assert!(matches!(
            apply_rewrite(&eq, &unknown, &ax),
            Err(RewriteError::UnknownRule(_))
        ));
        let mut conflicting = step;
        conflicting.substitution.insert(Var::X, p("pi"));
        assert!(apply_rewrite(&eq, &conflicting, &ax).is_err());
    }
}
