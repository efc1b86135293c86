//! Seeded RNG streams and the random expression grammar shared by the
//! generators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{BinaryOp, Constant, Decimal, Expr, UnaryOp, Var};

pub type StreamRng = ChaCha8Rng;

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the `index`-th independent stream under `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    mix64(mix64(base) ^ index.wrapping_mul(0xd605_bbb5_8c8a_bbfd))
}

/// Stable 64-bit FNV-1a hash, used to key streams by name.
pub fn stable_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn rng_from_seed(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

// Total functions weighted above the partial ones so that random terms are
// defined on most of the sampling interval.
const UNARY_WEIGHTS: &[(UnaryOp, u32)] = &[
    (UnaryOp::Sin, 8),
    (UnaryOp::Cos, 8),
    (UnaryOp::Tan, 3),
    (UnaryOp::Neg, 4),
    (UnaryOp::Exp, 3),
    (UnaryOp::Atan, 3),
    (UnaryOp::Sinh, 2),
    (UnaryOp::Cosh, 2),
    (UnaryOp::Tanh, 2),
    (UnaryOp::Asinh, 2),
    (UnaryOp::Sqrt, 1),
    (UnaryOp::Log, 1),
    (UnaryOp::Sec, 1),
    (UnaryOp::Csc, 1),
    (UnaryOp::Cot, 1),
    (UnaryOp::Asin, 1),
    (UnaryOp::Acos, 1),
    (UnaryOp::Acot, 1),
    (UnaryOp::Sech, 1),
];

const BINARY_WEIGHTS: &[(BinaryOp, u32)] = &[
    (BinaryOp::Add, 5),
    (BinaryOp::Mul, 5),
    (BinaryOp::Sub, 3),
    (BinaryOp::Div, 2),
    (BinaryOp::Pow, 2),
];

/// Grammar-driven random terms.
#[derive(Clone, Debug, PartialEq)]
pub struct ExprSampler {
    /// Probability of stopping at a leaf before the depth bound.
    pub leaf_probability: f64,
    /// Probability that a leaf is a variable rather than a constant.
    pub variable_probability: f64,
    /// Probability that a constant leaf is a decimal literal.
    pub decimal_probability: f64,
    /// Probability that an internal node is unary.
    pub unary_probability: f64,
}

impl Default for ExprSampler {
    fn default() -> Self {
        ExprSampler {
            leaf_probability: 0.5,
            variable_probability: 0.5,
            decimal_probability: 0.1,
            unary_probability: 0.45,
        }
    }
}

impl ExprSampler {
    /// A random tree of depth at most `max_depth`.
    pub fn expr<R: Rng + ?Sized>(&self, max_depth: usize, rng: &mut R) -> Expr {
        if max_depth == 0 || rng.gen_bool(self.leaf_probability) {
            return self.leaf(rng);
        }
        if rng.gen_bool(self.unary_probability) {
            Expr::unary(pick_weighted(UNARY_WEIGHTS, rng), self.expr(max_depth - 1, rng))
        } else {
            let op = pick_weighted(BINARY_WEIGHTS, rng);
            Expr::binary(op, self.expr(max_depth - 1, rng), self.expr(max_depth - 1, rng))
        }
    }

    pub fn leaf<R: Rng + ?Sized>(&self, rng: &mut R) -> Expr {
        if rng.gen_bool(self.variable_probability) {
            Expr::Var(*Var::ALL.choose(rng).expect("nonempty"))
        } else {
            Expr::Const(self.constant(rng))
        }
    }

    pub fn constant<R: Rng + ?Sized>(&self, rng: &mut R) -> Constant {
        if rng.gen_bool(self.decimal_probability) {
            let scaled = rng.gen_range(Decimal::MIN_SCALED..=Decimal::MAX_SCALED);
            Constant::Decimal(Decimal::new(scaled).expect("in range"))
        } else {
            *Constant::NAMED.choose(rng).expect("nonempty")
        }
    }
}

/// A tree over every operator and constant form, for exercising the parser
/// and printer rather than for generating plausible terms.
pub fn any_expr<R: Rng + ?Sized>(max_depth: usize, rng: &mut R) -> Expr {
    if max_depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..3) {
            0 => Expr::Var(*Var::ALL.choose(rng).expect("nonempty")),
            1 => Expr::Const(*Constant::NAMED.choose(rng).expect("nonempty")),
            _ => Expr::Const(Constant::Decimal(
                Decimal::new(rng.gen_range(Decimal::MIN_SCALED..=Decimal::MAX_SCALED))
                    .expect("in range"),
            )),
        };
    }
    if rng.gen_bool(0.5) {
        let op = *UnaryOp::ALL.choose(rng).expect("nonempty");
        Expr::unary(op, any_expr(max_depth - 1, rng))
    } else {
        let op = *BinaryOp::ALL.choose(rng).expect("nonempty");
        Expr::binary(op, any_expr(max_depth - 1, rng), any_expr(max_depth - 1, rng))
    }
}

fn pick_weighted<T: Copy, R: Rng + ?Sized>(table: &[(T, u32)], rng: &mut R) -> T {
    table
        .choose_weighted(rng, |(_, w)| *w)
        .expect("weights are positive")
        .0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_expr;

    #[test]
    fn render_parse_round_trip_ten_thousand_trees() {
        let mut rng = rng_from_seed(7);
        for _ in 0..10_000 {
            let e = any_expr(7, &mut rng);
            assert!(e.depth() <= 7);
            let text = e.to_string();
            assert_eq!(parse_expr(&text).unwrap(), e, "{text}");
        }
    }

    #[test]
    fn sampler_respects_depth() {
        let mut rng = rng_from_seed(1);
        let s = ExprSampler::default();
        for d in 0..5 {
            for _ in 0..200 {
                assert!(s.expr(d, &mut rng).depth() <= d);
            }
        }
    }

    #[test]
    fn derived_seeds_differ() {
        let a: Vec<u64> = (0..100).map(|i| derive_seed(42, i)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(a.len(), b.len());
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }
}
