use std::collections::HashMap;

use rug::Rational;

use super::{Expr, Func, Node};

impl Expr {
    /// Partial derivative with respect to `v`.
    pub fn diff(&self, v: &str) -> Expr {
        if !self.may_contain(v) {
            return Expr::zero();
        }
        match self.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(n) => {
                if &**n == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(ts) => Expr::add_all(ts.iter().map(|t| t.diff(v))),
            Node::Mul(fs) => {
                let mut terms = Vec::new();
                for i in 0..fs.len() {
                    let d = fs[i].diff(v);
                    if d.is_zero() {
                        continue;
                    }
                    let mut parts = Vec::with_capacity(fs.len());
                    parts.extend(fs[..i].iter().cloned());
                    parts.push(d);
                    parts.extend(fs[i + 1..].iter().cloned());
                    terms.push(Expr::mul_all(parts));
                }
                Expr::add_all(terms)
            }
            Node::Pow(b, e) => {
                let db = b.diff(v);
                if db.is_zero() {
                    return Expr::zero();
                }
                let em1 = Rational::from(e - 1u32);
                Expr::mul_all([Expr::constant(e.clone()), b.pow(&em1), db])
            }
            Node::Func(k, a) => {
                let da = a.diff(v);
                if da.is_zero() {
                    return Expr::zero();
                }
                let outer = match k {
                    Func::Sin => a.cos(),
                    Func::Cos => -a.sin(),
                    Func::Exp => self.clone(),
                    Func::Log => a.recip(),
                };
                outer * da
            }
        }
    }

    /// Simultaneous substitution followed by normalization.
    pub fn substitute(&self, bindings: &HashMap<&str, Expr>) -> Expr {
        if bindings.is_empty() {
            return self.clone();
        }
        let mask = bindings.keys().fold(0u64, |m, k| m | super::var_bit(k));
        self.subst_masked(bindings, mask)
    }

    fn subst_masked(&self, bindings: &HashMap<&str, Expr>, mask: u64) -> Expr {
        if self.0.mask & mask == 0 {
            return self.clone();
        }
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(n) => bindings.get(&**n).cloned().unwrap_or_else(|| self.clone()),
            Node::Add(ts) => Expr::add_all(ts.iter().map(|t| t.subst_masked(bindings, mask))),
            Node::Mul(fs) => Expr::mul_all(fs.iter().map(|t| t.subst_masked(bindings, mask))),
            Node::Pow(b, e) => b.subst_masked(bindings, mask).pow(e),
            Node::Func(k, a) => Expr::apply(*k, a.subst_masked(bindings, mask)),
        }
    }

    /// Convenience for a single binding.
    pub fn subs(&self, var: &str, value: &Expr) -> Expr {
        let mut b = HashMap::new();
        b.insert(var, value.clone());
        self.substitute(&b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    const VARS: [&str; 6] = ["x", "y", "p", "q", "l", "r"];

    fn p(s: &str) -> Expr {
        parse_expr(s, &VARS).unwrap()
    }

    #[test]
    fn power_rule() {
        assert_eq!(p("x^2").diff("x"), p("2*x"));
        assert_eq!(p("1/3*l^3").diff("l"), p("l^2"));
        assert!(p("y^5").diff("x").is_zero());
    }

    #[test]
    fn chain_rule_through_sqrt() {
        let d = p("sqrt(p*q)").diff("p");
        assert_eq!(d, p("q*(p*q)^(-1/2)/2"));
    }

    #[test]
    fn functions() {
        assert_eq!(p("sin(x^2)").diff("x"), p("2*x*cos(x^2)"));
        assert_eq!(p("log(x)").diff("x"), p("1/x"));
        assert_eq!(p("exp(2*x)").diff("x"), p("2*exp(2*x)"));
    }

    #[test]
    fn substitution_examples() {
        assert_eq!(p("x+y").subs("y", &Expr::zero()), p("x"));
        let lm = parse_expr("l^m", &["l", "m"]).unwrap();
        let rm = parse_expr("r^m", &["r", "m"]).unwrap();
        assert_eq!(lm.subs("l", &Expr::var("r")), rm);
        let s = parse_expr("sqrt(a*b)", &["a", "b"]).unwrap();
        let mut b = HashMap::new();
        b.insert("a", p("p^2"));
        b.insert("b", p("q^2"));
        assert_eq!(s.substitute(&b), p("p*q"));
    }

    #[test]
    fn simultaneous() {
        let mut b = HashMap::new();
        b.insert("x", p("y"));
        b.insert("y", p("x"));
        assert_eq!(p("x - 2*y").substitute(&b), p("y - 2*x"));
    }
}
