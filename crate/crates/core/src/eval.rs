//! Real-valued IEEE double evaluation with domain tracking.

use std::f64::consts::FRAC_PI_2;

use crate::expr::{BinaryOp, Expr, Path, UnaryOp, Var};

/// Variable bindings for evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Env {
    values: [Option<f64>; 3],
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn with(mut self, var: Var, value: f64) -> Env {
        self.set(var, value);
        self
    }

    pub fn set(&mut self, var: Var, value: f64) {
        self.values[var.index()] = Some(value);
    }

    pub fn get(&self, var: Var) -> Option<f64> {
        self.values[var.index()]
    }

    pub fn bindings(&self) -> impl Iterator<Item = (Var, f64)> + '_ {
        Var::ALL
            .iter()
            .filter_map(|&v| self.get(v).map(|x| (v, x)))
    }
}

impl FromIterator<(Var, f64)> for Env {
    fn from_iter<T: IntoIterator<Item = (Var, f64)>>(iter: T) -> Self {
        let mut env = Env::new();
        for (v, x) in iter {
            env.set(v, x);
        }
        env
    }
}

/// Outcome of evaluating an expression.
#[derive(Clone, Debug, PartialEq)]
pub enum EvalResult {
    /// A finite, non-NaN value.
    Finite(f64),
    /// The subterm at the path left its real domain.
    DomainError(Path),
    /// Some intermediate value was not finite.
    Overflow,
}

impl EvalResult {
    pub fn finite(&self) -> Option<f64> {
        match self {
            EvalResult::Finite(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_domain_error(&self) -> bool {
        matches!(self, EvalResult::DomainError(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("variable `{0}` is not bound")]
pub struct UnboundVariable(pub Var);

enum Fail {
    Domain,
    Overflow,
}

enum Stop {
    Domain(Vec<usize>),
    Overflow,
    Unbound(Var),
}

/// Evaluates `e` under `env` in double precision.
pub fn evaluate(e: &Expr, env: &Env) -> Result<EvalResult, UnboundVariable> {
    let mut path = Vec::new();
    match eval_at(e, env, &mut path) {
        Ok(v) => Ok(EvalResult::Finite(v)),
        Err(Stop::Domain(p)) => Ok(EvalResult::DomainError(Path(p))),
        Err(Stop::Overflow) => Ok(EvalResult::Overflow),
        Err(Stop::Unbound(v)) => Err(UnboundVariable(v)),
    }
}

fn eval_at(e: &Expr, env: &Env, path: &mut Vec<usize>) -> Result<f64, Stop> {
    let raw = match e {
        Expr::Const(c) => Ok(c.value()),
        Expr::Var(v) => return env.get(*v).ok_or(Stop::Unbound(*v)),
        Expr::Unary(op, a) => {
            path.push(0);
            let x = eval_at(a, env, path)?;
            path.pop();
            apply_unary(*op, x)
        }
        Expr::Binary(op, a, b) => {
            path.push(0);
            let x = eval_at(a, env, path)?;
            path.pop();
            path.push(1);
            let y = eval_at(b, env, path)?;
            path.pop();
            apply_binary(*op, x, y)
        }
    };
    match raw {
        Ok(v) if v.is_nan() => Err(Stop::Domain(path.clone())),
        Ok(v) if v.is_infinite() => Err(Stop::Overflow),
        Ok(v) => Ok(v),
        Err(Fail::Domain) => Err(Stop::Domain(path.clone())),
        Err(Fail::Overflow) => Err(Stop::Overflow),
    }
}

fn require(ok: bool) -> Result<(), Fail> {
    if ok {
        Ok(())
    } else {
        Err(Fail::Domain)
    }
}

/// Denominators this small only arise from rounding at a pole, where the
/// computed value is noise rather than a function value.
pub const POLE_TOLERANCE: f64 = 1e-12;

fn recip(x: f64) -> Result<f64, Fail> {
    require(x.abs() >= POLE_TOLERANCE)?;
    Ok(1.0 / x)
}

fn apply_unary(op: UnaryOp, x: f64) -> Result<f64, Fail> {
    use UnaryOp::*;
    Ok(match op {
        Neg => -x,
        Sin => x.sin(),
        Cos => x.cos(),
        Tan => {
            require(x.cos().abs() >= POLE_TOLERANCE)?;
            x.tan()
        }
        Cot => {
            let s = x.sin();
            require(s.abs() >= POLE_TOLERANCE)?;
            x.cos() / s
        }
        Sec => recip(x.cos())?,
        Csc => recip(x.sin())?,
        Asin => {
            require(x.abs() <= 1.0)?;
            x.asin()
        }
        Acos => {
            require(x.abs() <= 1.0)?;
            x.acos()
        }
        Atan => x.atan(),
        // Continuous branch with range (0, pi).
        Acot => FRAC_PI_2 - x.atan(),
        Asec => {
            require(x.abs() >= 1.0)?;
            (1.0 / x).acos()
        }
        Acsc => {
            require(x.abs() >= 1.0)?;
            (1.0 / x).asin()
        }
        Sinh => x.sinh(),
        Cosh => x.cosh(),
        Tanh => x.tanh(),
        Coth => recip(x.tanh())?,
        Sech => {
            let c = x.cosh();
            if c.is_infinite() {
                return Err(Fail::Overflow);
            }
            1.0 / c
        }
        Csch => {
            let s = x.sinh();
            if s.is_infinite() {
                return Err(Fail::Overflow);
            }
            recip(s)?
        }
        Asinh => x.asinh(),
        Acosh => {
            require(x >= 1.0)?;
            x.acosh()
        }
        Atanh => {
            require(x.abs() < 1.0)?;
            x.atanh()
        }
        Acoth => {
            require(x.abs() > 1.0)?;
            (1.0 / x).atanh()
        }
        Asech => {
            require(x > 0.0 && x <= 1.0)?;
            (1.0 / x).acosh()
        }
        Acsch => recip(x)?.asinh(),
        Exp => x.exp(),
        Log => {
            require(x > 0.0)?;
            x.ln()
        }
        Sqrt => {
            require(x >= 0.0)?;
            x.sqrt()
        }
    })
}

fn apply_binary(op: BinaryOp, x: f64, y: f64) -> Result<f64, Fail> {
    Ok(match op {
        BinaryOp::Add => x + y,
        BinaryOp::Sub => x - y,
        BinaryOp::Mul => x * y,
        BinaryOp::Div => {
            require(y.abs() >= POLE_TOLERANCE)?;
            x / y
        }
        BinaryOp::Pow => {
            require(!(x < 0.0 && y.fract() != 0.0))?;
            require(!(x == 0.0 && y < 0.0))?;
            x.powf(y)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_expr;

    fn eval(text: &str, env: Env) -> EvalResult {
        evaluate(&parse_expr(text).unwrap(), &env).unwrap()
    }

    fn at_x(x: f64) -> Env {
        Env::new().with(Var::X, x)
    }

    #[test]
    fn pythagorean_of_sine_is_exactly_one_at_1_6() {
        let r = eval("(+ (pow (sin (sin x)) 2) (pow (cos (sin x)) 2))", at_x(1.6));
        assert_eq!(r, EvalResult::Finite(1.0));
    }

    #[test]
    fn cubed_cosine_variant() {
        // 0.865728622246734 from a 50-digit evaluation.
        let v = eval("(+ (pow (sin (sin x)) 2) (pow (cos (sin x)) 3))", at_x(1.6))
            .finite()
            .unwrap();
        assert!((v - 0.865_728_622_246_734).abs() < 1e-12, "{v}");
    }

    #[test]
    fn domain_errors_carry_paths() {
        assert_eq!(eval("(asin x)", at_x(2.0)), EvalResult::DomainError(Path::root()));
        assert_eq!(
            eval("(+ 1 (log (neg x)))", at_x(2.0)),
            EvalResult::DomainError(Path(vec![1]))
        );
        assert!(eval("(sqrt x)", at_x(-1.0)).is_domain_error());
        assert!(eval("(/ 1 x)", at_x(0.0)).is_domain_error());
        assert!(eval("(acosh x)", at_x(0.5)).is_domain_error());
        assert!(eval("(atanh x)", at_x(1.0)).is_domain_error());
        assert!(eval("(pow x (const 1/2))", at_x(-4.0)).is_domain_error());
        assert!(eval("(pow 0 -1)", Env::new()).is_domain_error());
        assert!(eval("(asec x)", at_x(0.5)).is_domain_error());
        assert!(eval("(log 0)", Env::new()).is_domain_error());
    }

    #[test]
    fn rounded_poles_are_domain_errors() {
        assert!(eval("(sec (* pi (const 1/2)))", Env::new()).is_domain_error());
        assert!(eval("(tan (* pi (const 1/2)))", Env::new()).is_domain_error());
        assert!(eval("(csc pi)", Env::new()).is_domain_error());
        assert!(eval("(cot pi)", Env::new()).is_domain_error());
        assert!(eval("(/ 1 (- (+ (pow (sin x) 2) (pow (cos x) 2)) 1))", at_x(0.7)).is_domain_error());
        assert!(eval("(sec x)", at_x(1.5)).finite().is_some());
    }

    #[test]
    fn negative_base_with_integer_exponent() {
        assert_eq!(eval("(pow x 2)", at_x(-3.0)), EvalResult::Finite(9.0));
        assert_eq!(eval("(pow x 3)", at_x(-2.0)), EvalResult::Finite(-8.0));
        assert_eq!(eval("(pow 0 0)", Env::new()), EvalResult::Finite(1.0));
    }

    #[test]
    fn overflow() {
        assert_eq!(eval("(pow 10 (pow 10 10))", Env::new()), EvalResult::Overflow);
        assert_eq!(
            eval(
                "(+ (pow (sin (pow 10 (pow 10 10))) 2) (pow (cos (pow 10 (pow 10 10))) 2))",
                Env::new()
            ),
            EvalResult::Overflow
        );
        assert_eq!(eval("(exp (exp (exp 3)))", Env::new()), EvalResult::Overflow);
        assert_eq!(eval("(sech (exp 10))", Env::new()), EvalResult::Overflow);
    }

    #[test]
    fn unbound_variable() {
        let e = parse_expr("(+ x y)").unwrap();
        assert_eq!(evaluate(&e, &at_x(1.0)), Err(UnboundVariable(Var::Y)));
    }

    #[test]
    fn inverse_functions_match_reciprocal_definitions() {
        let v = eval("(acot 1)", Env::new()).finite().unwrap();
        assert!((v - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        let v = eval("(asech (const 1/2))", Env::new()).finite().unwrap();
        assert!((v - 2f64.acosh()).abs() < 1e-15);
    }
}
