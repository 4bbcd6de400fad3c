//! Exact symbolic expressions over the rationals.
//!
//! Every `Expr` is kept in a normal form by its constructors: sums and
//! products are flattened and sorted, like terms and like bases are merged,
//! products are distributed over sums (up to a size guard) and constant
//! powers are folded. Fractional powers follow the positive-branch
//! convention, so `(a^2)^(1/2)` normalizes to `a`.

mod diff;
mod display;
mod eval;
mod parse;
mod sample;

use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rug::{Integer, Rational};

pub use eval::{evaluate, Point, Value, PRECISION};
pub use parse::{parse_expr, parse_expr_with};
pub use sample::{fingerprint, is_zero, is_zero_all, salt_of, Sampler, SamplerConfig};

/// Largest number of terms a product may expand into before distribution is skipped.
const DISTRIBUTE_LIMIT: usize = 512;
/// Largest positive integer power of a sum that is expanded.
const EXPAND_POWER_LIMIT: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Const(Rational),
    Var(Arc<str>),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, Rational),
    Func(Func, Expr),
}

#[derive(Debug)]
struct Inner {
    node: Node,
    /// One bit per variable-name hash bucket; a cheap "may contain" filter.
    mask: u64,
    size: u32,
}

/// An immutable, normalized expression. Cloning is a reference-count bump.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.node == other.0.node
    }
}

impl Eq for Expr {}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return std::cmp::Ordering::Equal;
        }
        self.0.node.cmp(&other.0.node)
    }
}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.node.hash(state)
    }
}

impl std::fmt::Debug for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self)
    }
}

fn var_bit(name: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    1u64 << (h % 64)
}

fn rat_one() -> Rational {
    Rational::from(1)
}

impl Expr {
    fn from_node(node: Node) -> Expr {
        let (mask, size) = match &node {
            Node::Const(_) => (0, 1),
            Node::Var(n) => (var_bit(n), 1),
            Node::Add(ts) | Node::Mul(ts) => ts.iter().fold((0, 1u32), |(m, s), t| {
                (m | t.0.mask, s.saturating_add(t.0.size))
            }),
            Node::Pow(b, _) => (b.0.mask, b.0.size.saturating_add(1)),
            Node::Func(_, a) => (a.0.mask, a.0.size.saturating_add(1)),
        };
        Expr(Arc::new(Inner { node, mask, size }))
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        self.0.size as usize
    }

    pub fn constant(r: impl Into<Rational>) -> Expr {
        Expr::from_node(Node::Const(r.into()))
    }

    pub fn int(i: i64) -> Expr {
        Expr::constant(Rational::from(i))
    }

    pub fn ratio(num: i64, den: i64) -> Expr {
        Expr::constant(Rational::from((num, den)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(name: &str) -> Expr {
        Expr::from_node(Node::Var(Arc::from(name)))
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self.node() {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match self.node() {
            Node::Var(v) => Some(v),
            _ => None,
        }
    }

    /// Structural zero, i.e. the normal form is the constant 0.
    pub fn is_zero(&self) -> bool {
        matches!(self.node(), Node::Const(c) if *c == 0)
    }

    pub fn is_one(&self) -> bool {
        matches!(self.node(), Node::Const(c) if *c == 1)
    }

    /// Cheap filter: `false` guarantees `var` does not occur.
    pub fn may_contain(&self, var: &str) -> bool {
        self.0.mask & var_bit(var) != 0
    }

    pub fn contains_var(&self, var: &str) -> bool {
        if !self.may_contain(var) {
            return false;
        }
        match self.node() {
            Node::Const(_) => false,
            Node::Var(v) => &**v == var,
            Node::Add(ts) | Node::Mul(ts) => ts.iter().any(|t| t.contains_var(var)),
            Node::Pow(b, _) | Node::Func(_, b) => b.contains_var(var),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Arc<str>>) {
        match self.node() {
            Node::Const(_) => {}
            Node::Var(v) => {
                out.insert(v.clone());
            }
            Node::Add(ts) | Node::Mul(ts) => ts.iter().for_each(|t| t.collect_vars(out)),
            Node::Pow(b, _) | Node::Func(_, b) => b.collect_vars(out),
        }
    }

    /// True when no transcendental function occurs.
    pub fn is_func_free(&self) -> bool {
        match self.node() {
            Node::Const(_) | Node::Var(_) => true,
            Node::Add(ts) | Node::Mul(ts) => ts.iter().all(Expr::is_func_free),
            Node::Pow(b, _) => b.is_func_free(),
            Node::Func(..) => false,
        }
    }

    /// Rational class: no functions and only integer exponents.
    pub fn is_rational_class(&self) -> bool {
        match self.node() {
            Node::Const(_) | Node::Var(_) => true,
            Node::Add(ts) | Node::Mul(ts) => ts.iter().all(Expr::is_rational_class),
            Node::Pow(b, e) => e.is_integer() && b.is_rational_class(),
            Node::Func(..) => false,
        }
    }

    /// Splits off the rational coefficient of a term.
    fn split_coeff(&self) -> (Rational, Expr) {
        if let Node::Mul(fs) = self.node() {
            if let Node::Const(c) = fs[0].node() {
                let rest = if fs.len() == 2 {
                    fs[1].clone()
                } else {
                    Expr::from_node(Node::Mul(fs[1..].to_vec()))
                };
                return (c.clone(), rest);
            }
        }
        (rat_one(), self.clone())
    }

    fn scaled(c: Rational, rest: Expr) -> Expr {
        if c == 1 {
            return rest;
        }
        match rest.node() {
            Node::Mul(fs) => {
                let mut v = Vec::with_capacity(fs.len() + 1);
                v.push(Expr::constant(c));
                v.extend(fs.iter().cloned());
                Expr::from_node(Node::Mul(v))
            }
            _ => Expr::from_node(Node::Mul(vec![Expr::constant(c), rest])),
        }
    }

    pub fn add_all<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut constant = Rational::new();
        let mut coeffs: BTreeMap<Expr, Rational> = BTreeMap::new();
        fn push(t: Expr, constant: &mut Rational, coeffs: &mut BTreeMap<Expr, Rational>) {
            match t.node() {
                Node::Const(c) => *constant += c,
                Node::Add(ts) => {
                    for s in ts {
                        push(s.clone(), constant, coeffs);
                    }
                }
                _ => {
                    let (c, rest) = t.split_coeff();
                    *coeffs.entry(rest).or_default() += c;
                }
            }
        }
        for t in terms {
            push(t, &mut constant, &mut coeffs);
        }
        let mut out: Vec<Expr> = coeffs
            .into_iter()
            .filter(|(_, c)| *c != 0)
            .map(|(rest, c)| Expr::scaled(c, rest))
            .collect();
        if out.is_empty() {
            return Expr::constant(constant);
        }
        if constant != 0 {
            out.push(Expr::constant(constant));
        }
        if out.len() == 1 {
            return out.pop().unwrap();
        }
        out.sort();
        Expr::from_node(Node::Add(out))
    }

    pub fn mul_all<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        let mut coeff = rat_one();
        let mut bases: BTreeMap<Expr, Rational> = BTreeMap::new();
        let mut exp_args: Vec<Expr> = Vec::new();

        fn push(
            f: Expr,
            coeff: &mut Rational,
            bases: &mut BTreeMap<Expr, Rational>,
            exp_args: Option<&mut Vec<Expr>>,
        ) {
            match f.node() {
                Node::Const(c) => *coeff *= c,
                Node::Mul(fs) => {
                    let mut exp_args = exp_args;
                    for g in fs {
                        push(g.clone(), coeff, bases, exp_args.as_deref_mut());
                    }
                }
                Node::Func(Func::Exp, a) => match exp_args {
                    Some(args) => args.push(a.clone()),
                    None => *bases.entry(f.clone()).or_default() += 1,
                },
                Node::Pow(b, e) => match (b.node(), exp_args) {
                    (Node::Func(Func::Exp, a), Some(args)) => {
                        args.push(Expr::mul_all([Expr::constant(e.clone()), a.clone()]))
                    }
                    _ => *bases.entry(b.clone()).or_default() += e,
                },
                _ => *bases.entry(f).or_default() += 1,
            }
        }

        for f in factors {
            push(f, &mut coeff, &mut bases, Some(&mut exp_args));
        }
        if coeff == 0 {
            return Expr::zero();
        }
        if !exp_args.is_empty() {
            let arg = if exp_args.len() == 1 {
                exp_args.pop().unwrap()
            } else {
                Expr::add_all(exp_args)
            };
            let e = Expr::apply(Func::Exp, arg);
            push(e, &mut coeff, &mut bases, None);
        }

        let mut out: Vec<Expr> = Vec::new();
        let mut sums: Vec<Expr> = Vec::new();
        for (b, e) in bases {
            if e == 0 {
                continue;
            }
            let p = b.pow(&e);
            match p.node() {
                Node::Const(c) => coeff *= c,
                Node::Add(_) => sums.push(p),
                Node::Mul(fs) => {
                    for g in fs {
                        match g.node() {
                            Node::Const(c) => coeff *= c,
                            _ => out.push(g.clone()),
                        }
                    }
                }
                _ => out.push(p),
            }
        }
        if coeff == 0 {
            return Expr::zero();
        }
        if !sums.is_empty() {
            let mut prefix = out.clone();
            prefix.push(Expr::constant(coeff.clone()));
            let prefix = Expr::build_product(rat_one(), prefix);
            if let Some(expanded) = Expr::distribute(prefix, &sums) {
                return expanded;
            }
            out.extend(sums);
        }
        Expr::build_product(coeff, out)
    }

    /// Assembles an already-merged factor list without further normalization.
    fn build_product(mut coeff: Rational, factors: Vec<Expr>) -> Expr {
        let mut out = Vec::with_capacity(factors.len() + 1);
        for f in factors {
            match f.node() {
                Node::Const(c) => coeff *= c,
                _ => out.push(f),
            }
        }
        if coeff == 0 {
            return Expr::zero();
        }
        if out.is_empty() {
            return Expr::constant(coeff);
        }
        out.sort();
        if coeff == 1 && out.len() == 1 {
            return out.pop().unwrap();
        }
        if coeff != 1 {
            out.insert(0, Expr::constant(coeff));
        }
        Expr::from_node(Node::Mul(out))
    }

    /// Multiplies `prefix` by every sum in `sums`, expanding the product.
    fn distribute(prefix: Expr, sums: &[Expr]) -> Option<Expr> {
        let mut count: usize = 1;
        for s in sums {
            if let Node::Add(ts) = s.node() {
                count = count.saturating_mul(ts.len());
            }
        }
        if count > DISTRIBUTE_LIMIT {
            return None;
        }
        let mut terms = vec![prefix];
        for s in sums {
            let parts: &[Expr] = match s.node() {
                Node::Add(ts) => ts,
                _ => std::slice::from_ref(s),
            };
            let mut next = Vec::with_capacity(terms.len() * parts.len());
            for t in &terms {
                for p in parts {
                    next.push(Expr::mul_all([t.clone(), p.clone()]));
                }
            }
            terms = next;
        }
        Some(Expr::add_all(terms))
    }

    pub fn pow(&self, e: &Rational) -> Expr {
        if *e == 0 {
            return Expr::one();
        }
        if *e == 1 {
            return self.clone();
        }
        match self.node() {
            Node::Const(c) => const_pow(c, e),
            Node::Pow(b, f) => b.pow(&Rational::from(f * e)),
            Node::Mul(fs) => {
                let mut dist = Vec::new();
                let mut keep = Vec::new();
                for f in fs {
                    match f.node() {
                        Node::Const(c) => dist.push(const_pow(c, e)),
                        Node::Pow(b, k) => {
                            let ke = Rational::from(k * e);
                            if ke.is_integer() {
                                dist.push(b.pow(&ke));
                            } else {
                                keep.push(f.clone());
                            }
                        }
                        _ => {
                            if e.is_integer() {
                                dist.push(f.pow(e));
                            } else {
                                keep.push(f.clone());
                            }
                        }
                    }
                }
                match keep.len() {
                    0 => {}
                    1 => dist.push(keep[0].pow(e)),
                    _ => {
                        let kept =
                            Expr::from_node(Node::Pow(Expr::from_node(Node::Mul(keep)), e.clone()));
                        if dist.is_empty() {
                            return kept;
                        }
                        dist.push(kept);
                    }
                }
                Expr::mul_all(dist)
            }
            Node::Add(_) => {
                if e.is_integer() && *e > 0 && *e <= EXPAND_POWER_LIMIT {
                    let n = e.numer().to_u32().unwrap_or(0) as usize;
                    let sums = vec![self.clone(); n];
                    if let Some(x) = Expr::distribute(Expr::one(), &sums) {
                        return x;
                    }
                }
                Expr::from_node(Node::Pow(self.clone(), e.clone()))
            }
            Node::Func(Func::Exp, a) => Expr::apply(
                Func::Exp,
                Expr::mul_all([Expr::constant(e.clone()), a.clone()]),
            ),
            _ => Expr::from_node(Node::Pow(self.clone(), e.clone())),
        }
    }

    pub fn powi(&self, i: i64) -> Expr {
        self.pow(&Rational::from(i))
    }

    pub fn recip(&self) -> Expr {
        self.powi(-1)
    }

    pub fn sqrt(&self) -> Expr {
        self.pow(&Rational::from((1, 2)))
    }

    /// General power; a non-constant exponent is written as `exp(e*log(b))`.
    pub fn pow_expr(&self, e: &Expr) -> Expr {
        match e.as_const() {
            Some(c) => self.pow(c),
            None => Expr::apply(
                Func::Exp,
                Expr::mul_all([e.clone(), Expr::apply(Func::Log, self.clone())]),
            ),
        }
    }

    pub fn apply(f: Func, arg: Expr) -> Expr {
        match f {
            Func::Sin if arg.is_zero() => Expr::zero(),
            Func::Cos if arg.is_zero() => Expr::one(),
            Func::Exp => {
                if arg.is_zero() {
                    return Expr::one();
                }
                let terms: Vec<Expr> = match arg.node() {
                    Node::Add(ts) => ts.clone(),
                    _ => vec![arg.clone()],
                };
                let mut factors = Vec::new();
                let mut rest = Vec::new();
                for t in terms {
                    match log_term(&t) {
                        Some((c, b)) => factors.push(b.pow(&c)),
                        None => rest.push(t),
                    }
                }
                if factors.is_empty() {
                    return Expr::from_node(Node::Func(Func::Exp, arg));
                }
                if !rest.is_empty() {
                    factors.push(Expr::from_node(Node::Func(Func::Exp, Expr::add_all(rest))));
                }
                Expr::mul_all(factors)
            }
            Func::Log => match arg.node() {
                Node::Const(c) if *c == 1 => Expr::zero(),
                Node::Func(Func::Exp, a) => a.clone(),
                Node::Pow(b, e) => {
                    Expr::mul_all([Expr::constant(e.clone()), Expr::apply(Func::Log, b.clone())])
                }
                _ => Expr::from_node(Node::Func(Func::Log, arg)),
            },
            _ => Expr::from_node(Node::Func(f, arg)),
        }
    }

    pub fn sin(&self) -> Expr {
        Expr::apply(Func::Sin, self.clone())
    }

    pub fn cos(&self) -> Expr {
        Expr::apply(Func::Cos, self.clone())
    }

    pub fn exp(&self) -> Expr {
        Expr::apply(Func::Exp, self.clone())
    }

    pub fn log(&self) -> Expr {
        Expr::apply(Func::Log, self.clone())
    }

    pub fn scale(&self, c: &Rational) -> Expr {
        Expr::mul_all([Expr::constant(c.clone()), self.clone()])
    }

    /// Re-runs normalization bottom-up. Constructors already normalize, so
    /// this is the identity on any `Expr` built through them.
    pub fn normalize(&self) -> Expr {
        match self.node() {
            Node::Const(_) | Node::Var(_) => self.clone(),
            Node::Add(ts) => Expr::add_all(ts.iter().map(Expr::normalize)),
            Node::Mul(fs) => Expr::mul_all(fs.iter().map(Expr::normalize)),
            Node::Pow(b, e) => b.normalize().pow(e),
            Node::Func(f, a) => Expr::apply(*f, a.normalize()),
        }
    }
}

/// Recognizes `c*log(b)` with rational `c`.
fn log_term(t: &Expr) -> Option<(Rational, Expr)> {
    match t.node() {
        Node::Func(Func::Log, b) => Some((rat_one(), b.clone())),
        Node::Mul(fs) if fs.len() == 2 => match (fs[0].node(), fs[1].node()) {
            (Node::Const(c), Node::Func(Func::Log, b)) => Some((c.clone(), b.clone())),
            _ => None,
        },
        _ => None,
    }
}

/// Exact integer `q`-th root, if there is one.
pub(crate) fn exact_root(n: &Integer, q: u32) -> Option<Integer> {
    if *n < 0 {
        return None;
    }
    let r = n.clone().root(q);
    if rug::ops::Pow::pow(r.clone(), q) == *n {
        Some(r)
    } else {
        None
    }
}

fn const_pow(c: &Rational, e: &Rational) -> Expr {
    use rug::ops::Pow;
    if e.is_integer() {
        if *c == 0 && *e < 0 {
            return Expr::from_node(Node::Pow(Expr::constant(c.clone()), e.clone()));
        }
        match e.numer().to_i32() {
            Some(k) => return Expr::constant(c.clone().pow(k)),
            None => return Expr::from_node(Node::Pow(Expr::constant(c.clone()), e.clone())),
        }
    }
    if *c == 0 {
        return if *e > 0 {
            Expr::zero()
        } else {
            Expr::from_node(Node::Pow(Expr::constant(c.clone()), e.clone()))
        };
    }
    if *c < 0 || *c == 1 {
        if *c == 1 {
            return Expr::one();
        }
        return Expr::from_node(Node::Pow(Expr::constant(c.clone()), e.clone()));
    }
    let q = e.denom().to_u32();
    let p = e.numer().to_i32();
    if let (Some(q), Some(p)) = (q, p) {
        if let (Some(rn), Some(rd)) = (exact_root(c.numer(), q), exact_root(c.denom(), q)) {
            let root = Rational::from((rn, rd));
            return Expr::constant(root.pow(p));
        }
    }
    let floor = e.clone().floor();
    let frac = Rational::from(e - &floor);
    if floor == 0 {
        return Expr::from_node(Node::Pow(Expr::constant(c.clone()), e.clone()));
    }
    let whole = match floor.numer().to_i32() {
        Some(k) => c.clone().pow(k),
        None => return Expr::from_node(Node::Pow(Expr::constant(c.clone()), e.clone())),
    };
    Expr::from_node(Node::Mul(vec![
        Expr::constant(whole),
        Expr::from_node(Node::Pow(Expr::constant(c.clone()), frac)),
    ]))
}

macro_rules! bin_op {
    ($tr:ident, $m:ident, $body:expr) => {
        impl std::ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl std::ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
        impl std::ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs)
            }
        }
    };
}

bin_op!(Add, add, |a, b| Expr::add_all([a, b]));
bin_op!(Sub, sub, |a, b| Expr::add_all([a, -b]));
bin_op!(Mul, mul, |a, b| Expr::mul_all([a, b]));
bin_op!(Div, div, |a, b| Expr::mul_all([a, b.recip()]));

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::mul_all([Expr::int(-1), self])
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -(self.clone())
    }
}

impl From<i64> for Expr {
    fn from(i: i64) -> Expr {
        Expr::int(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expr {
        Expr::var("x")
    }
    fn y() -> Expr {
        Expr::var("y")
    }

    #[test]
    fn like_terms_merge() {
        let e = &x() + &x() + Expr::int(3) - Expr::int(3);
        assert_eq!(e, Expr::int(2) * x());
        assert!((&x() - &x()).is_zero());
    }

    #[test]
    fn square_of_sum_expands() {
        let s = &x() + &y();
        let e = s.powi(2) - x().powi(2) - Expr::int(2) * &x() * &y() - y().powi(2);
        assert!(e.is_zero());
    }

    #[test]
    fn reciprocal_cancels_before_distribution() {
        let s = &x() + &y();
        let e = &s * &s.recip();
        assert!(e.is_one());
        let e = (&s * &x()) / &x();
        assert_eq!(e, s);
    }

    #[test]
    fn constant_powers_fold() {
        assert_eq!(Expr::int(4).sqrt(), Expr::int(2));
        assert_eq!(Expr::ratio(4, 9).sqrt(), Expr::ratio(2, 3));
        let r2 = Expr::int(2).sqrt();
        assert_eq!(&r2 * &r2, Expr::int(2));
        assert_eq!(
            Expr::int(8).pow(&Rational::from((3, 2))).to_string(),
            "8*8^(1/2)"
        );
    }

    #[test]
    fn positive_branch_of_square_root() {
        let p = Expr::var("p");
        let q = Expr::var("q");
        let e = (p.powi(2) * q.powi(2)).sqrt();
        assert_eq!(e, &p * &q);
        let s = (&p * &q).sqrt();
        assert!(matches!(s.node(), Node::Pow(_, _)));
    }

    #[test]
    fn exp_log_rules() {
        let l = Expr::var("l");
        let m = Expr::var("m");
        let lm = l.pow_expr(&m);
        assert!(matches!(lm.node(), Node::Func(Func::Exp, _)));
        let three = lm.to_string();
        assert!(three.contains("exp"));
        assert_eq!(l.pow_expr(&Expr::int(3)), l.powi(3));
        assert_eq!(l.log().exp(), l);
        assert_eq!(l.exp().log(), l);
        // exp((m-1)*log(l)) = exp(m*log(l)) / l
        let e = l.pow_expr(&(&m - Expr::one())) - &lm / &l;
        assert!(e.is_zero());
    }

    #[test]
    fn normalize_is_identity_on_constructed() {
        let e = (x() + y()).recip() * Expr::int(2) * Expr::var("n") + x().sin().powi(2);
        assert_eq!(e.normalize(), e);
        assert_eq!(e.normalize().normalize(), e.normalize());
    }

    #[test]
    fn mask_filters_absent_variables() {
        let e = x() * y() + Expr::var("z");
        assert!(e.contains_var("z"));
        assert!(!e.contains_var("w"));
    }
}
