//! Random-evaluation equation verifier.
//!
//! Variables are drawn uniformly from an interval, both sides are evaluated in
//! double precision, and the sides are compared against a threshold. One
//! sample beyond the threshold is enough to call an equation false; calling it
//! true takes a minimum number of agreeing samples. Anything in between (too
//! many domain errors, overflow) is reported as [`Outcome::Unknown`].

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::eval::{evaluate, Env, EvalResult};
use crate::expr::{Equation, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToleranceMode {
    /// `|l - r| <= epsilon`
    Absolute,
    /// `|l - r| <= epsilon * max(1, |l|, |r|)`
    RelativeWithFloor,
}

/// Half-width of the default sampling interval. Deliberately 3.14 rather
/// than pi.
#[allow(clippy::approx_constant)]
pub const SAMPLE_BOUND: f64 = 3.14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub epsilon: f64,
    pub trials: usize,
    /// Open sampling interval for every variable.
    pub interval: (f64, f64),
    pub min_valid_samples: usize,
    /// Draws allowed per trial while either side hits a domain error.
    pub resample_limit: usize,
    pub tolerance_mode: ToleranceMode,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            epsilon: 1e-6,
            trials: 8,
            interval: (-SAMPLE_BOUND, SAMPLE_BOUND),
            min_valid_samples: 3,
            resample_limit: 16,
            tolerance_mode: ToleranceMode::RelativeWithFloor,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("epsilon must be positive, got {0}")]
    Epsilon(f64),
    #[error("trials must be at least 1")]
    Trials,
    #[error("min_valid_samples must be in 1..=trials*resample_limit")]
    MinValid,
    #[error("interval ({0}, {1}) is empty or not finite")]
    Interval(f64, f64),
}

impl OracleConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(ConfigError::Epsilon(self.epsilon));
        }
        if self.trials == 0 {
            return Err(ConfigError::Trials);
        }
        if self.min_valid_samples == 0
            || self.min_valid_samples > self.trials * self.resample_limit.max(1)
        {
            return Err(ConfigError::MinValid);
        }
        let (lo, hi) = self.interval;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(ConfigError::Interval(lo, hi));
        }
        Ok(())
    }

    /// Same settings with twice as many trials.
    pub fn doubled(&self) -> OracleConfig {
        OracleConfig {
            trials: self.trials * 2,
            ..self.clone()
        }
    }

    /// Distance between two side values under the tolerance mode, in units
    /// comparable to `epsilon`.
    pub fn deviation(&self, lhs: f64, rhs: f64) -> f64 {
        let diff = (lhs - rhs).abs();
        match self.tolerance_mode {
            ToleranceMode::Absolute => diff,
            ToleranceMode::RelativeWithFloor => diff / 1f64.max(lhs.abs()).max(rhs.abs()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    True,
    False,
    Unknown,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::True => "true",
            Outcome::False => "false",
            Outcome::Unknown => "unknown",
        })
    }
}

/// One jointly finite evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub env: Env,
    pub lhs: f64,
    pub rhs: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub outcome: Outcome,
    /// Valid samples in draw order.
    pub evidence: Vec<Sample>,
    /// Draws where at least one side left its domain.
    pub domain_errors: usize,
    /// Draws where exactly one side was finite and the other left its domain.
    pub one_sided: usize,
    /// Draws where at least one side overflowed.
    pub overflows: usize,
    /// Trials that produced no valid sample.
    pub invalid_trials: usize,
}

impl Verdict {
    pub fn valid_samples(&self) -> usize {
        self.evidence.len()
    }

    pub fn max_deviation(&self) -> f64 {
        self.evidence
            .iter()
            .map(|s| s.deviation)
            .fold(0.0, f64::max)
    }

    pub fn empty() -> Verdict {
        Verdict {
            outcome: Outcome::Unknown,
            evidence: Vec::new(),
            domain_errors: 0,
            one_sided: 0,
            overflows: 0,
            invalid_trials: 0,
        }
    }
}

/// Draws each variable independently and uniformly from `cfg.interval`.
pub fn sample_env<R: Rng + ?Sized>(vars: &BTreeSet<Var>, cfg: &OracleConfig, rng: &mut R) -> Env {
    let (lo, hi) = cfg.interval;
    vars.iter().map(|&v| (v, rng.gen_range(lo..hi))).collect()
}

enum Draw {
    Valid(Sample),
    Domain { one_sided: bool },
    Overflow,
}

fn draw(eq: &Equation, env: Env, cfg: &OracleConfig) -> Draw {
    let l = evaluate(&eq.lhs, &env).expect("env binds every free variable");
    let r = evaluate(&eq.rhs, &env).expect("env binds every free variable");
    match (l, r) {
        (EvalResult::Finite(lhs), EvalResult::Finite(rhs)) => Draw::Valid(Sample {
            env,
            lhs,
            rhs,
            deviation: cfg.deviation(lhs, rhs),
        }),
        (l @ EvalResult::DomainError(_), r) | (l, r @ EvalResult::DomainError(_)) => {
            Draw::Domain {
                one_sided: l.finite().is_some() || r.finite().is_some(),
            }
        }
        _ => Draw::Overflow,
    }
}

/// Verifies `eq` by random evaluation.
pub fn verify<R: Rng + ?Sized>(eq: &Equation, cfg: &OracleConfig, rng: &mut R) -> Verdict {
    let vars = eq.free_variables();
    let mut verdict = Verdict::empty();

    if vars.is_empty() {
        match draw(eq, Env::new(), cfg) {
            Draw::Valid(s) => {
                verdict.outcome = if s.deviation > cfg.epsilon {
                    Outcome::False
                } else {
                    Outcome::True
                };
                verdict.evidence.push(s);
            }
            Draw::Domain { one_sided } => {
                verdict.domain_errors = 1;
                verdict.one_sided = usize::from(one_sided);
                verdict.invalid_trials = 1;
            }
            Draw::Overflow => {
                verdict.overflows = 1;
                verdict.invalid_trials = 1;
            }
        }
        return verdict;
    }

    for _ in 0..cfg.trials {
        let mut attempts = 0;
        loop {
            let env = sample_env(&vars, cfg, rng);
            match draw(eq, env, cfg) {
                Draw::Valid(s) => {
                    let exceeded = s.deviation > cfg.epsilon;
                    verdict.evidence.push(s);
                    if exceeded {
                        verdict.outcome = Outcome::False;
                        return verdict;
                    }
                    break;
                }
                Draw::Domain { one_sided } => {
                    verdict.domain_errors += 1;
                    verdict.one_sided += usize::from(one_sided);
                    attempts += 1;
                    if attempts >= cfg.resample_limit {
                        verdict.invalid_trials += 1;
                        break;
                    }
                }
                Draw::Overflow => {
                    verdict.overflows += 1;
                    verdict.invalid_trials += 1;
                    break;
                }
            }
        }
    }
    if verdict.valid_samples() >= cfg.min_valid_samples {
        verdict.outcome = Outcome::True;
    }
    verdict
}

/// Judges `eq` on caller-chosen environments, in order, with the same
/// threshold rules as [`verify`] (every environment counts as one trial).
pub fn verify_at(eq: &Equation, envs: &[Env], cfg: &OracleConfig) -> Verdict {
    let mut verdict = Verdict::empty();
    for env in envs {
        match draw(eq, *env, cfg) {
            Draw::Valid(s) => {
                let exceeded = s.deviation > cfg.epsilon;
                verdict.evidence.push(s);
                if exceeded {
                    verdict.outcome = Outcome::False;
                    return verdict;
                }
            }
            Draw::Domain { one_sided } => {
                verdict.domain_errors += 1;
                verdict.one_sided += usize::from(one_sided);
                verdict.invalid_trials += 1;
            }
            Draw::Overflow => {
                verdict.overflows += 1;
                verdict.invalid_trials += 1;
            }
        }
    }
    let needed = if eq.free_variables().is_empty() {
        1
    } else {
        cfg.min_valid_samples
    };
    if verdict.valid_samples() >= needed {
        verdict.outcome = Outcome::True;
    }
    verdict
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_equation;
    use crate::random::rng_from_seed;

    fn eq(s: &str) -> Equation {
        parse_equation(s).unwrap()
    }

    #[test]
    fn empty_vars_give_empty_env() {
        let env = sample_env(&BTreeSet::new(), &OracleConfig::default(), &mut rng_from_seed(1));
        assert_eq!(env, Env::new());
    }

    #[test]
    fn sampling_is_replayable() {
        let vars: BTreeSet<Var> = [Var::X].into();
        let cfg = OracleConfig::default();
        let a = sample_env(&vars, &cfg, &mut rng_from_seed(99));
        let b = sample_env(&vars, &cfg, &mut rng_from_seed(99));
        assert_eq!(a, b);
        let x = a.get(Var::X).unwrap();
        assert!(x > -SAMPLE_BOUND && x < SAMPLE_BOUND);
    }

    #[test]
    fn sample_mean_within_three_sigma() {
        let vars: BTreeSet<Var> = [Var::Y].into();
        let cfg = OracleConfig::default();
        let mut rng = rng_from_seed(2024);
        let n = 10_000;
        let sum: f64 = (0..n)
            .map(|_| sample_env(&vars, &cfg, &mut rng).get(Var::Y).unwrap())
            .sum();
        let mean = sum / n as f64;
        // Uniform on (-a, a): variance a^2/3.
        let sigma = (SAMPLE_BOUND * SAMPLE_BOUND / 3.0 / n as f64).sqrt();
        assert!(mean.abs() < 3.0 * sigma, "mean {mean}, sigma {sigma}");
    }

    #[test]
    fn ground_equations_need_one_evaluation() {
        let cfg = OracleConfig::default();
        let v = verify(&eq("(= (+ 2 2) 4)"), &cfg, &mut rng_from_seed(0));
        assert_eq!(v.outcome, Outcome::True);
        assert_eq!(v.valid_samples(), 1);
        let v = verify(&eq("(= (+ 2 2) 3)"), &cfg, &mut rng_from_seed(0));
        assert_eq!(v.outcome, Outcome::False);
    }

    #[test]
    fn unknown_on_persistent_domain_errors() {
        let cfg = OracleConfig::default();
        let v = verify(&eq("(= (acosh (neg (pow x 2))) 0)"), &cfg, &mut rng_from_seed(3));
        // acosh(-x^2) needs -x^2 >= 1: never.
        assert_eq!(v.outcome, Outcome::Unknown);
        assert_eq!(v.invalid_trials, cfg.trials);
        assert_eq!(v.domain_errors, cfg.trials * cfg.resample_limit);
    }

    #[test]
    fn resampling_finds_the_domain() {
        let cfg = OracleConfig::default();
        let v = verify(&eq("(= (sqrt (pow (sqrt x) 2)) (sqrt x))"), &cfg, &mut rng_from_seed(5));
        assert_eq!(v.outcome, Outcome::True);
        assert!(v.domain_errors > 0);
        assert!(v.evidence.iter().all(|s| s.env.get(Var::X).unwrap() >= 0.0));
    }

    #[test]
    fn config_validation() {
        assert!(OracleConfig::default().validate().is_ok());
        let bad = OracleConfig {
            epsilon: 0.0,
            ..OracleConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = OracleConfig {
            min_valid_samples: 1000,
            ..OracleConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn deviation_modes() {
        let rel = OracleConfig::default();
        assert_eq!(rel.deviation(1000.0, 1001.0), 1.0 / 1001.0);
        assert_eq!(rel.deviation(0.1, 0.2), 0.1);
        let abs = OracleConfig {
            tolerance_mode: ToleranceMode::Absolute,
            ..rel
        };
        assert_eq!(abs.deviation(1000.0, 1001.0), 1.0);
    }
}
