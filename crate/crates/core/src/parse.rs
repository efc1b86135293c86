//! Prefix-notation reader. Rendering is the `Display` impl on [`Expr`] and
//! [`Equation`]; `parse_expr(&e.to_string()) == e` for every tree.

use crate::expr::{BinaryOp, Constant, Decimal, Equation, Expr, UnaryOp, Var};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol `{token}` at byte {pos}")]
    UnknownSymbol { pos: usize, token: String },
    #[error("`{op}` at byte {pos} takes {expected} argument(s), found {found}")]
    Arity {
        pos: usize,
        op: String,
        expected: usize,
        found: usize,
    },
    #[error("constant `{token}` at byte {pos} is outside the language")]
    ConstantOutOfRange { pos: usize, token: String },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::UnknownSymbol { pos, .. }
            | ParseError::Arity { pos, .. }
            | ParseError::ConstantOutOfRange { pos, .. } => *pos,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn tokenize(text: &str) -> Vec<(usize, Token<'_>)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        let delim = ch == '(' || ch == ')' || ch.is_whitespace();
        if delim {
            if let Some(s) = start.take() {
                out.push((s, Token::Atom(&text[s..i])));
            }
            match ch {
                '(' => out.push((i, Token::Open)),
                ')' => out.push((i, Token::Close)),
                _ => {}
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, Token::Atom(&text[s..])));
    }
    out
}

/// Parsed form before `=` handling.
enum Node {
    Expr(Expr),
    Equation(Equation),
}

struct Parser<'a> {
    tokens: Vec<(usize, Token<'a>)>,
    at: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            tokens: tokenize(text),
            at: 0,
            end: text.len(),
        }
    }

    fn peek_pos(&self) -> usize {
        self.tokens.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn next(&mut self) -> Option<(usize, Token<'a>)> {
        let t = self.tokens.get(self.at).cloned();
        self.at += 1;
        t
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.at < self.tokens.len() {
            return Err(ParseError::Syntax {
                pos: self.peek_pos(),
                msg: "trailing input".into(),
            });
        }
        Ok(())
    }

    fn node(&mut self, allow_equation: bool) -> Result<Node, ParseError> {
        match self.next() {
            None => Err(ParseError::Syntax {
                pos: self.end,
                msg: "unexpected end of input".into(),
            }),
            Some((pos, Token::Close)) => Err(ParseError::Syntax {
                pos,
                msg: "unexpected `)`".into(),
            }),
            Some((pos, Token::Atom(tok))) => atom(pos, tok).map(Node::Expr),
            Some((pos, Token::Open)) => self.form(pos, allow_equation),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        match self.node(false)? {
            Node::Expr(e) => Ok(e),
            Node::Equation(_) => unreachable!("equations rejected when not allowed"),
        }
    }

    fn form(&mut self, open: usize, allow_equation: bool) -> Result<Node, ParseError> {
        let (head_pos, head) = match self.next() {
            Some((p, Token::Atom(h))) => (p, h),
            Some((p, _)) => {
                return Err(ParseError::Syntax {
                    pos: p,
                    msg: "expected operator after `(`".into(),
                })
            }
            None => {
                return Err(ParseError::Syntax {
                    pos: self.end,
                    msg: "unexpected end of input".into(),
                })
            }
        };
        match head {
            "const" => self.rational(head_pos).map(Node::Expr),
            "dec" => self.scaled_decimal(head_pos).map(Node::Expr),
            "=" if allow_equation => {
                let args = self.args(head_pos, "=", 2)?;
                let mut it = args.into_iter();
                let (lhs, rhs) = (it.next().unwrap(), it.next().unwrap());
                Ok(Node::Equation(Equation::new(lhs, rhs)))
            }
            _ => {
                if let Some(op) = unary_from_token(head, head_pos) {
                    let mut args = self.args(head_pos, head, 1)?;
                    Ok(Node::Expr(Expr::unary(op, args.remove(0))))
                } else if let Some(op) = BinaryOp::from_token(head) {
                    let mut args = self.args(head_pos, head, 2)?;
                    let b = args.remove(1);
                    Ok(Node::Expr(Expr::binary(op, args.remove(0), b)))
                } else if atom(head_pos, head).is_ok() {
                    Err(ParseError::Syntax {
                        pos: open,
                        msg: format!("`{head}` is not an operator"),
                    })
                } else {
                    Err(ParseError::UnknownSymbol {
                        pos: head_pos,
                        token: head.to_string(),
                    })
                }
            }
        }
    }

    fn args(&mut self, pos: usize, op: &str, expected: usize) -> Result<Vec<Expr>, ParseError> {
        let mut args = Vec::with_capacity(expected);
        loop {
            match self.tokens.get(self.at) {
                Some((_, Token::Close)) => {
                    self.at += 1;
                    break;
                }
                None => {
                    return Err(ParseError::Syntax {
                        pos: self.end,
                        msg: format!("unclosed `({op}`"),
                    })
                }
                _ => args.push(self.expr()?),
            }
        }
        if args.len() != expected {
            return Err(ParseError::Arity {
                pos,
                op: op.to_string(),
                expected,
                found: args.len(),
            });
        }
        Ok(args)
    }

    fn closing_atom(&mut self, what: &str) -> Result<(usize, &'a str), ParseError> {
        let (pos, tok) = match self.next() {
            Some((p, Token::Atom(t))) => (p, t),
            Some((p, _)) => {
                return Err(ParseError::Syntax {
                    pos: p,
                    msg: format!("expected {what}"),
                })
            }
            None => {
                return Err(ParseError::Syntax {
                    pos: self.end,
                    msg: format!("expected {what}"),
                })
            }
        };
        match self.next() {
            Some((_, Token::Close)) => Ok((pos, tok)),
            Some((p, _)) => Err(ParseError::Syntax {
                pos: p,
                msg: "expected `)`".into(),
            }),
            None => Err(ParseError::Syntax {
                pos: self.end,
                msg: "expected `)`".into(),
            }),
        }
    }

    fn rational(&mut self, head_pos: usize) -> Result<Expr, ParseError> {
        let (pos, tok) = self.closing_atom("rational `a/b`")?;
        let bad_syntax = || ParseError::Syntax {
            pos,
            msg: format!("malformed rational `{tok}`"),
        };
        let (n, d) = tok.split_once('/').ok_or_else(bad_syntax)?;
        let n: i64 = n.parse().map_err(|_| bad_syntax())?;
        let d: i64 = d.parse().map_err(|_| bad_syntax())?;
        if d == 0 {
            return Err(bad_syntax());
        }
        // Only 1/2 is a language constant; compare in lowest terms.
        if n != 0 && 2 * n == d {
            Ok(Expr::Const(Constant::Half))
        } else {
            Err(ParseError::ConstantOutOfRange {
                pos: head_pos,
                token: format!("(const {tok})"),
            })
        }
    }

    fn scaled_decimal(&mut self, head_pos: usize) -> Result<Expr, ParseError> {
        let (pos, tok) = self.closing_atom("scaled integer")?;
        let scaled: i64 = tok.parse().map_err(|_| ParseError::Syntax {
            pos,
            msg: format!("malformed scaled decimal `{tok}`"),
        })?;
        i16::try_from(scaled)
            .ok()
            .and_then(Decimal::new)
            .map(|d| Expr::Const(Constant::Decimal(d)))
            .ok_or_else(|| ParseError::ConstantOutOfRange {
                pos: head_pos,
                token: format!("(dec {tok})"),
            })
    }
}

fn unary_from_token(tok: &str, pos: usize) -> Option<UnaryOp> {
    if tok == "scsh" {
        log::warn!("`scsh` at byte {pos} read as `csch`");
        return Some(UnaryOp::Csch);
    }
    UnaryOp::from_token(tok)
}

fn atom(pos: usize, tok: &str) -> Result<Expr, ParseError> {
    if let Some(v) = Var::from_name(tok) {
        return Ok(Expr::Var(v));
    }
    if tok == "θ" || tok == "theta" {
        return Ok(Expr::Var(Var::X));
    }
    if let Some(c) = Constant::from_token(tok) {
        return Ok(Expr::Const(c));
    }
    if let Some(scaled) = decimal_literal(tok) {
        return scaled
            .and_then(|s| i16::try_from(s).ok())
            .and_then(Decimal::new)
            .map(|d| Expr::Const(Constant::Decimal(d)))
            .ok_or_else(|| ParseError::ConstantOutOfRange {
                pos,
                token: tok.to_string(),
            });
    }
    if UnaryOp::from_token(tok).is_some() || BinaryOp::from_token(tok).is_some() {
        return Err(ParseError::Syntax {
            pos,
            msg: format!("operator `{tok}` used without `(`"),
        });
    }
    Err(ParseError::UnknownSymbol {
        pos,
        token: tok.to_string(),
    })
}

/// `Some(Some(v))` for a numeric literal with at most two fractional digits
/// (value × 100), `Some(None)` for a number with more precision, `None` if the
/// token is not numeric.
fn decimal_literal(tok: &str) -> Option<Option<i64>> {
    let (neg, body) = match tok.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, tok),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let digits = |s: &str| s.chars().all(|c| c.is_ascii_digit());
    if int.is_empty() || !digits(int) || !digits(frac) {
        return None;
    }
    if frac.len() > 2 || int.len() > 6 {
        return Some(None);
    }
    let int: i64 = int.parse().ok()?;
    let frac_scaled: i64 = match frac.len() {
        0 => 0,
        1 => frac.parse::<i64>().ok()? * 10,
        _ => frac.parse().ok()?,
    };
    let v = int * 100 + frac_scaled;
    Some(Some(if neg { -v } else { v }))
}

/// Parses one expression in prefix notation.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text);
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

/// Parses `(= lhs rhs)`.
pub fn parse_equation(text: &str) -> Result<Equation, ParseError> {
    let mut p = Parser::new(text);
    let start = p.peek_pos();
    let node = p.node(true)?;
    p.finish()?;
    match node {
        Node::Equation(eq) => Ok(eq),
        Node::Expr(_) => Err(ParseError::Syntax {
            pos: start,
            msg: "expected `(= lhs rhs)`".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Var;

    #[test]
    fn smallest_binary_tree() {
        let e = parse_expr("(+ 1 1)").unwrap();
        assert_eq!(
            e,
            Expr::binary(BinaryOp::Add, Constant::One.into(), Constant::One.into())
        );
        assert_eq!(e.to_string(), "(+ 1 1)");
    }

    #[test]
    fn pythagorean_side() {
        let e = parse_expr("(+ (pow (sin x) 2) (pow (cos x) 2))").unwrap();
        let sin2 = Expr::binary(
            BinaryOp::Pow,
            Expr::unary(UnaryOp::Sin, Var::X.into()),
            Constant::Two.into(),
        );
        let cos2 = Expr::binary(
            BinaryOp::Pow,
            Expr::unary(UnaryOp::Cos, Var::X.into()),
            Constant::Two.into(),
        );
        assert_eq!(e, Expr::binary(BinaryOp::Add, sin2, cos2));
    }

    #[test]
    fn nested_unary() {
        let e = parse_expr("(sin (sin y))").unwrap();
        assert_eq!(
            e,
            Expr::unary(UnaryOp::Sin, Expr::unary(UnaryOp::Sin, Var::Y.into()))
        );
        assert_eq!(e.depth(), 2);
    }

    #[test]
    fn half_and_decimals() {
        assert_eq!(parse_expr("(const 1/2)").unwrap(), Expr::Const(Constant::Half));
        assert_eq!(parse_expr("(const 2/4)").unwrap(), Expr::Const(Constant::Half));
        assert_eq!(Expr::Const(Constant::Half).to_string(), "(const 1/2)");
        let d = parse_expr("2.2").unwrap();
        assert_eq!(d.to_string(), "(dec 220)");
        assert_eq!(parse_expr("(dec -150)").unwrap(), parse_expr("-1.5").unwrap());
        assert_ne!(parse_expr("0.50").unwrap(), parse_expr("(const 1/2)").unwrap());
        assert_eq!(parse_expr("-2").unwrap().to_string(), "(dec -200)");
    }

    #[test]
    fn theta_and_scsh_aliases() {
        assert_eq!(parse_expr("(sin θ)").unwrap(), parse_expr("(sin x)").unwrap());
        assert_eq!(parse_expr("(scsh x)").unwrap(), parse_expr("(csch x)").unwrap());
        assert_eq!(parse_expr("(scsh θ)").unwrap().to_string(), "(csch x)");
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_expr("5.00"),
            Err(ParseError::ConstantOutOfRange { pos: 0, .. })
        ));
        assert!(matches!(
            parse_expr("(dec 500)"),
            Err(ParseError::ConstantOutOfRange { .. })
        ));
        assert!(matches!(
            parse_expr("1.234"),
            Err(ParseError::ConstantOutOfRange { .. })
        ));
        assert!(matches!(
            parse_expr("(const 1/3)"),
            Err(ParseError::ConstantOutOfRange { .. })
        ));
        assert!(matches!(
            parse_expr("(foo x)"),
            Err(ParseError::UnknownSymbol { pos: 1, .. })
        ));
        assert!(matches!(parse_expr("w"), Err(ParseError::UnknownSymbol { .. })));
        assert!(matches!(
            parse_expr("(sin x y)"),
            Err(ParseError::Arity {
                expected: 1,
                found: 2,
                ..
            })
        ));
        assert!(matches!(
            parse_expr("(+ x)"),
            Err(ParseError::Arity { found: 1, .. })
        ));
        assert!(matches!(parse_expr("(+ x y"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_expr("x y"), Err(ParseError::Syntax { pos: 2, .. })));
        assert!(matches!(parse_expr(")"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_expr(""), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_expr("sin"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_expr("(= 1 1)"), Err(ParseError::UnknownSymbol { .. })));
    }

    #[test]
    fn equations() {
        let eq = parse_equation("(= (+ 2 2) 4)").unwrap();
        assert_eq!(eq.to_string(), "(= (+ 2 2) 4)");
        assert!(parse_equation("(+ 2 2)").is_err());
        assert!(parse_equation("(= 1)").is_err());
        assert!(parse_equation("(= 1 (= 1 1))").is_err());
    }

    #[test]
    fn binary_minus_versus_negative_one() {
        let e = parse_expr("(- -1 1)").unwrap();
        assert_eq!(
            e,
            Expr::binary(BinaryOp::Sub, Constant::NegOne.into(), Constant::One.into())
        );
    }
}
