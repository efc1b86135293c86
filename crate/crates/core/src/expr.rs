//! Expression trees over the equation language: symbols, paths and equations.
//!
//! Text I/O lives in [`crate::parse`], floating-point semantics in
//! [`crate::eval`].

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

/// Object (and pattern) variables. The language has exactly three.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    X,
    Y,
    Z,
}

impl Var {
    pub const ALL: [Var; 3] = [Var::X, Var::Y, Var::Z];

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_name(name: &str) -> Option<Var> {
        match name {
            "x" => Some(Var::X),
            "y" => Some(Var::Y),
            "z" => Some(Var::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A decimal literal with two fractional digits, stored as value × 100.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Decimal(i16);

impl Decimal {
    pub const MIN_SCALED: i16 = -314;
    pub const MAX_SCALED: i16 = 314;

    pub fn new(scaled: i16) -> Option<Decimal> {
        (Self::MIN_SCALED..=Self::MAX_SCALED)
            .contains(&scaled)
            .then_some(Decimal(scaled))
    }

    pub fn scaled(self) -> i16 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 100.0
    }
}

/// Leaf constants. `Half` is the exact rational 1/2 and is distinct from
/// the decimal 0.50.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constant {
    NegOne,
    Zero,
    One,
    Two,
    Three,
    Four,
    Ten,
    Pi,
    Half,
    Decimal(Decimal),
}

impl Constant {
    /// Named constants ordered by numeric value.
    pub const NAMED: [Constant; 9] = [
        Constant::NegOne,
        Constant::Zero,
        Constant::Half,
        Constant::One,
        Constant::Two,
        Constant::Three,
        Constant::Pi,
        Constant::Four,
        Constant::Ten,
    ];

    pub fn value(self) -> f64 {
        match self {
            Constant::NegOne => -1.0,
            Constant::Zero => 0.0,
            Constant::One => 1.0,
            Constant::Two => 2.0,
            Constant::Three => 3.0,
            Constant::Four => 4.0,
            Constant::Ten => 10.0,
            Constant::Pi => std::f64::consts::PI,
            Constant::Half => 0.5,
            Constant::Decimal(d) => d.value(),
        }
    }

    /// True for constants with an integral value.
    pub fn is_integer(self) -> bool {
        match self {
            Constant::Pi | Constant::Half => false,
            Constant::Decimal(d) => d.scaled() % 100 == 0,
            _ => true,
        }
    }

    /// Token for named constants; `None` for the ones that need a form.
    pub fn token(self) -> Option<&'static str> {
        Some(match self {
            Constant::NegOne => "-1",
            Constant::Zero => "0",
            Constant::One => "1",
            Constant::Two => "2",
            Constant::Three => "3",
            Constant::Four => "4",
            Constant::Ten => "10",
            Constant::Pi => "pi",
            Constant::Half | Constant::Decimal(_) => return None,
        })
    }

    pub fn from_token(tok: &str) -> Option<Constant> {
        Some(match tok {
            "-1" => Constant::NegOne,
            "0" => Constant::Zero,
            "1" => Constant::One,
            "2" => Constant::Two,
            "3" => Constant::Three,
            "4" => Constant::Four,
            "10" => Constant::Ten,
            "pi" => Constant::Pi,
            _ => return None,
        })
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Half => f.write_str("(const 1/2)"),
            Constant::Decimal(d) => write!(f, "(dec {})", d.scaled()),
            named => f.write_str(named.token().unwrap_or_default()),
        }
    }
}

macro_rules! op_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $tok:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn token(self) -> &'static str {
                match self {
                    $($name::$variant => $tok),+
                }
            }

            pub fn from_token(tok: &str) -> Option<$name> {
                match tok {
                    $($tok => Some($name::$variant),)+
                    _ => None,
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.token())
            }
        }
    };
}

op_enum!(
    /// Unary operators, including unary minus.
    UnaryOp {
        Neg => "neg",
        Sin => "sin",
        Cos => "cos",
        Tan => "tan",
        Cot => "cot",
        Sec => "sec",
        Csc => "csc",
        Asin => "asin",
        Acos => "acos",
        Atan => "atan",
        Acot => "acot",
        Asec => "asec",
        Acsc => "acsc",
        Sinh => "sinh",
        Cosh => "cosh",
        Tanh => "tanh",
        Coth => "coth",
        Sech => "sech",
        Csch => "csch",
        Asinh => "asinh",
        Acosh => "acosh",
        Atanh => "atanh",
        Acoth => "acoth",
        Asech => "asech",
        Acsch => "acsch",
        Exp => "exp",
        Log => "log",
        Sqrt => "sqrt",
    }
);

op_enum!(
    /// Binary operators.
    BinaryOp {
        Add => "+",
        Mul => "*",
        Pow => "pow",
        Sub => "-",
        Div => "/",
    }
);

/// Operator families used when swapping one operator for a related one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpFamily {
    Trig,
    InverseTrig,
    Hyperbolic,
    InverseHyperbolic,
    Elementary,
}

impl UnaryOp {
    /// Everything except `neg` and `sqrt`.
    pub fn is_transcendental(self) -> bool {
        !matches!(self, UnaryOp::Neg | UnaryOp::Sqrt)
    }

    pub fn is_trigonometric(self) -> bool {
        matches!(
            self.family(),
            OpFamily::Trig | OpFamily::InverseTrig | OpFamily::Hyperbolic | OpFamily::InverseHyperbolic
        )
    }

    pub fn family(self) -> OpFamily {
        use UnaryOp::*;
        match self {
            Sin | Cos | Tan | Cot | Sec | Csc => OpFamily::Trig,
            Asin | Acos | Atan | Acot | Asec | Acsc => OpFamily::InverseTrig,
            Sinh | Cosh | Tanh | Coth | Sech | Csch => OpFamily::Hyperbolic,
            Asinh | Acosh | Atanh | Acoth | Asech | Acsch => OpFamily::InverseHyperbolic,
            Neg | Exp | Log | Sqrt => OpFamily::Elementary,
        }
    }
}

/// The symbol at a node, independent of its children.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symbol {
    Const(Constant),
    Var(Var),
    Unary(UnaryOp),
    Binary(BinaryOp),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    Constant,
    Variable,
    UnaryOp,
    BinaryOp,
}

impl Symbol {
    pub fn kind(self) -> SymbolKind {
        match self {
            Symbol::Const(_) => SymbolKind::Constant,
            Symbol::Var(_) => SymbolKind::Variable,
            Symbol::Unary(_) => SymbolKind::UnaryOp,
            Symbol::Binary(_) => SymbolKind::BinaryOp,
        }
    }

    pub fn arity(self) -> usize {
        match self.kind() {
            SymbolKind::Constant | SymbolKind::Variable => 0,
            SymbolKind::UnaryOp => 1,
            SymbolKind::BinaryOp => 2,
        }
    }
}

/// Immutable expression tree. Arity is enforced by construction.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Const(Constant),
    Var(Var),
    Unary(UnaryOp, Arc<Expr>),
    Binary(BinaryOp, Arc<Expr>, Arc<Expr>),
}

impl Expr {
    pub fn constant(c: Constant) -> Expr {
        Expr::Const(c)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn unary(op: UnaryOp, arg: Expr) -> Expr {
        Expr::Unary(op, Arc::new(arg))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Arc::new(lhs), Arc::new(rhs))
    }

    pub fn symbol(&self) -> Symbol {
        match self {
            Expr::Const(c) => Symbol::Const(*c),
            Expr::Var(v) => Symbol::Var(*v),
            Expr::Unary(op, _) => Symbol::Unary(*op),
            Expr::Binary(op, _, _) => Symbol::Binary(*op),
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Const(_) | Expr::Var(_) => Vec::new(),
            Expr::Unary(_, a) => vec![a],
            Expr::Binary(_, a, b) => vec![a, b],
        }
    }

    pub fn child(&self, index: usize) -> Option<&Expr> {
        match (self, index) {
            (Expr::Unary(_, a), 0) | (Expr::Binary(_, a, _), 0) => Some(a),
            (Expr::Binary(_, _, b), 1) => Some(b),
            _ => None,
        }
    }

    /// Rebuilds this node with the same symbol and new children.
    /// `children` must have the node's arity.
    pub fn with_children(&self, mut children: Vec<Expr>) -> Expr {
        match self {
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Unary(op, _) => Expr::unary(*op, children.remove(0)),
            Expr::Binary(op, _, _) => {
                let rhs = children.remove(1);
                Expr::binary(*op, children.remove(0), rhs)
            }
        }
    }

    /// Same children, different symbol of the same arity.
    pub fn with_symbol(&self, symbol: Symbol) -> Option<Expr> {
        Some(match (self, symbol) {
            (Expr::Const(_) | Expr::Var(_), Symbol::Const(c)) => Expr::Const(c),
            (Expr::Const(_) | Expr::Var(_), Symbol::Var(v)) => Expr::Var(v),
            (Expr::Unary(_, a), Symbol::Unary(op)) => Expr::Unary(op, Arc::clone(a)),
            (Expr::Binary(_, a, b), Symbol::Binary(op)) => {
                Expr::Binary(op, Arc::clone(a), Arc::clone(b))
            }
            _ => return None,
        })
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Expr::Const(_) | Expr::Var(_))
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().into_iter().map(Expr::node_count).sum::<usize>()
    }

    /// Height of the tree; a leaf has depth 0.
    pub fn depth(&self) -> usize {
        self.children()
            .into_iter()
            .map(|c| c.depth() + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn free_variables(&self) -> BTreeSet<Var> {
        let mut vars = BTreeSet::new();
        self.collect_vars(&mut vars);
        vars
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Var(v) => {
                out.insert(*v);
            }
            Expr::Const(_) => {}
            Expr::Unary(_, a) => a.collect_vars(out),
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Every subterm with its path, in pre-order. The first entry is the root.
    pub fn positions(&self) -> Vec<(Path, Expr)> {
        let mut out = Vec::with_capacity(self.node_count());
        let mut path = Vec::new();
        self.walk_positions(&mut path, &mut out);
        out
    }

    fn walk_positions(&self, path: &mut Vec<usize>, out: &mut Vec<(Path, Expr)>) {
        out.push((Path(path.clone()), self.clone()));
        for (i, child) in self.children().into_iter().enumerate() {
            path.push(i);
            child.walk_positions(path, out);
            path.pop();
        }
    }

    pub fn subterm(&self, path: &Path) -> Option<&Expr> {
        path.0
            .iter()
            .try_fold(self, |node, &i| node.child(i))
    }

    /// Returns a copy of `self` with the subterm at `path` replaced.
    pub fn replace_at(&self, path: &Path, sub: Expr) -> Result<Expr, InvalidPath> {
        self.replace_from(&path.0, sub)
            .ok_or_else(|| InvalidPath(path.clone()))
    }

    fn replace_from(&self, indices: &[usize], sub: Expr) -> Option<Expr> {
        let Some((&first, rest)) = indices.split_first() else {
            return Some(sub);
        };
        let child = self.child(first)?.replace_from(rest, sub)?;
        Some(match self {
            Expr::Unary(op, _) => Expr::unary(*op, child),
            Expr::Binary(op, a, b) => {
                if first == 0 {
                    Expr::Binary(*op, Arc::new(child), Arc::clone(b))
                } else {
                    Expr::Binary(*op, Arc::clone(a), Arc::new(child))
                }
            }
            Expr::Const(_) | Expr::Var(_) => unreachable!("leaves have no children"),
        })
    }

    /// Pre-order iterator over subterm references.
    pub fn iter(&self) -> impl Iterator<Item = &Expr> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            match node {
                Expr::Unary(_, a) => stack.push(a),
                Expr::Binary(_, a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
                _ => {}
            }
            Some(node)
        })
    }
}

impl From<Var> for Expr {
    fn from(v: Var) -> Self {
        Expr::Var(v)
    }
}

impl From<Constant> for Expr {
    fn from(c: Constant) -> Self {
        Expr::Const(c)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => c.fmt(f),
            Expr::Var(v) => v.fmt(f),
            Expr::Unary(op, a) => write!(f, "({op} {a})"),
            Expr::Binary(op, a, b) => write!(f, "({op} {a} {b})"),
        }
    }
}

/// Child indices from a root. For an [`Equation`] the first index selects
/// the side (0 = lhs, 1 = rhs).
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path(pub Vec<usize>);

impl Path {
    pub fn root() -> Path {
        Path(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, index: usize) -> Path {
        let mut v = self.0.clone();
        v.push(index);
        Path(v)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<usize>> for Path {
    fn from(v: Vec<usize>) -> Self {
        Path(v)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, idx) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{idx}")?;
        }
        write!(f, "]")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("path {0} is not valid for this expression")]
pub struct InvalidPath(pub Path);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Lhs,
    Rhs,
}

impl Side {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Side> {
        match i {
            0 => Some(Side::Lhs),
            1 => Some(Side::Rhs),
            _ => None,
        }
    }
}

/// `lhs = rhs`. The `=` is an implicit root with the two sides as children.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Equation {
    pub lhs: Expr,
    pub rhs: Expr,
}

impl Equation {
    pub fn new(lhs: Expr, rhs: Expr) -> Equation {
        Equation { lhs, rhs }
    }

    pub fn side(&self, side: Side) -> &Expr {
        match side {
            Side::Lhs => &self.lhs,
            Side::Rhs => &self.rhs,
        }
    }

    pub fn swapped(&self) -> Equation {
        Equation::new(self.rhs.clone(), self.lhs.clone())
    }

    pub fn node_count(&self) -> usize {
        self.lhs.node_count() + self.rhs.node_count()
    }

    pub fn free_variables(&self) -> BTreeSet<Var> {
        let mut vars = self.lhs.free_variables();
        vars.extend(self.rhs.free_variables());
        vars
    }

    /// Positions on both sides, lhs first, each side in pre-order.
    pub fn positions(&self) -> Vec<(Path, Expr)> {
        let mut out = Vec::with_capacity(self.node_count());
        for side in [Side::Lhs, Side::Rhs] {
            out.extend(
                self.side(side)
                    .positions()
                    .into_iter()
                    .map(|(p, e)| (prefixed(side, &p), e)),
            );
        }
        out
    }

    pub fn subterm(&self, path: &Path) -> Option<&Expr> {
        let (&first, rest) = path.0.split_first()?;
        self.side(Side::from_index(first)?)
            .subterm(&Path(rest.to_vec()))
    }

    pub fn replace_at(&self, path: &Path, sub: Expr) -> Result<Equation, InvalidPath> {
        let invalid = || InvalidPath(path.clone());
        let (&first, rest) = path.0.split_first().ok_or_else(invalid)?;
        let side = Side::from_index(first).ok_or_else(invalid)?;
        let replaced = self
            .side(side)
            .replace_at(&Path(rest.to_vec()), sub)
            .map_err(|_| invalid())?;
        Ok(match side {
            Side::Lhs => Equation::new(replaced, self.rhs.clone()),
            Side::Rhs => Equation::new(self.lhs.clone(), replaced),
        })
    }
}

fn prefixed(side: Side, p: &Path) -> Path {
    let mut v = Vec::with_capacity(p.len() + 1);
    v.push(side.index());
    v.extend_from_slice(&p.0);
    Path(v)
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(= {} {})", self.lhs, self.rhs)
    }
}
