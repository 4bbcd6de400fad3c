use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rug::ops::Pow;
use rug::{Float, Rational};

use super::{exact_root, Expr, Func, Node};
use crate::error::{Error, Result};

/// Working precision in bits for inexact evaluation (about 77 decimal digits).
pub const PRECISION: u32 = 256;

/// A point: values for every variable that occurs.
pub type Point = BTreeMap<Arc<str>, Rational>;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Exact(Rational),
    Approx(Float),
}

impl Value {
    pub fn to_float(&self) -> Float {
        match self {
            Value::Exact(r) => Float::with_val(PRECISION, r),
            Value::Approx(f) => f.clone(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => r.to_f64(),
            Value::Approx(f) => f.to_f64(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    /// Exactly zero, or within `tol` when approximate.
    pub fn is_zero_within(&self, tol: f64) -> bool {
        match self {
            Value::Exact(r) => *r == 0,
            Value::Approx(f) => f.is_zero() || f.clone().abs() <= tol,
        }
    }

    pub fn add(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(Rational::from(a + b)),
            _ => Value::Approx(self.to_float() + other.to_float()),
        }
    }

    pub fn mul(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(Rational::from(a * b)),
            _ => Value::Approx(self.to_float() * other.to_float()),
        }
    }

    fn is_exact_zero(&self) -> bool {
        match self {
            Value::Exact(r) => *r == 0,
            Value::Approx(f) => f.is_zero(),
        }
    }

    pub fn powr(&self, e: &Rational) -> Result<Value> {
        if e.is_integer() {
            let k = e
                .numer()
                .to_i32()
                .ok_or_else(|| Error::Domain("exponent too large".into()))?;
            if k < 0 && self.is_exact_zero() {
                return Err(Error::Domain("division by zero".into()));
            }
            return Ok(match self {
                Value::Exact(r) => Value::Exact(r.clone().pow(k)),
                Value::Approx(f) => Value::Approx(f.clone().pow(k)),
            });
        }
        match self {
            Value::Exact(r) => {
                if *r < 0 {
                    return Err(Error::Domain(
                        "fractional power of a negative number".into(),
                    ));
                }
                if *r == 0 {
                    return if *e > 0 {
                        Ok(Value::Exact(Rational::new()))
                    } else {
                        Err(Error::Domain("division by zero".into()))
                    };
                }
                if let (Some(q), Some(p)) = (e.denom().to_u32(), e.numer().to_i32()) {
                    if let (Some(rn), Some(rd)) =
                        (exact_root(r.numer(), q), exact_root(r.denom(), q))
                    {
                        return Ok(Value::Exact(Rational::from((rn, rd)).pow(p)));
                    }
                }
                let base = Float::with_val(PRECISION, r);
                Ok(Value::Approx(base.pow(Float::with_val(PRECISION, e))))
            }
            Value::Approx(f) => {
                if *f < 0 {
                    return Err(Error::Domain(
                        "fractional power of a negative number".into(),
                    ));
                }
                if f.is_zero() {
                    return if *e > 0 {
                        Ok(Value::Approx(Float::new(PRECISION)))
                    } else {
                        Err(Error::Domain("division by zero".into()))
                    };
                }
                Ok(Value::Approx(f.clone().pow(Float::with_val(PRECISION, e))))
            }
        }
    }

    pub fn apply(&self, k: Func) -> Result<Value> {
        if let Value::Exact(r) = self {
            if *r == 0 {
                match k {
                    Func::Sin => return Ok(Value::Exact(Rational::new())),
                    Func::Cos | Func::Exp => return Ok(Value::Exact(Rational::from(1))),
                    Func::Log => {}
                }
            }
            if k == Func::Log && *r == 1 {
                return Ok(Value::Exact(Rational::new()));
            }
        }
        let x = self.to_float();
        Ok(Value::Approx(match k {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Log => {
                if x <= 0 {
                    return Err(Error::Domain("log of a non-positive number".into()));
                }
                x.ln()
            }
        }))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(r) => write!(f, "{}", r),
            Value::Approx(x) => write!(f, "{:.17e}", x.to_f64()),
        }
    }
}

/// Evaluates `e` at `point`. The result is exact unless a transcendental
/// function or an irrational root is encountered.
pub fn evaluate(e: &Expr, point: &Point) -> Result<Value> {
    match e.node() {
        Node::Const(c) => Ok(Value::Exact(c.clone())),
        Node::Var(v) => point
            .get(&**v)
            .map(|r| Value::Exact(r.clone()))
            .ok_or_else(|| Error::Domain(format!("no value for `{}`", v))),
        Node::Add(ts) => {
            let mut acc = Value::Exact(Rational::new());
            for t in ts {
                acc = acc.add(&evaluate(t, point)?);
            }
            Ok(acc)
        }
        Node::Mul(fs) => {
            let mut acc = Value::Exact(Rational::from(1));
            for t in fs {
                acc = acc.mul(&evaluate(t, point)?);
            }
            Ok(acc)
        }
        Node::Pow(b, p) => evaluate(b, point)?.powr(p),
        Node::Func(k, a) => evaluate(a, point)?.apply(*k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn pt(pairs: &[(&str, i64)]) -> Point {
        pairs
            .iter()
            .map(|(k, v)| (Arc::from(*k), Rational::from(*v)))
            .collect()
    }

    #[test]
    fn exact_rational() {
        let e = parse_expr("(x+y)^(-1)", &["x", "y"]).unwrap();
        assert_eq!(
            evaluate(&e, &pt(&[("x", 1), ("y", 1)])).unwrap(),
            Value::Exact(Rational::from((1, 2)))
        );
        assert!(matches!(
            evaluate(&e, &pt(&[("x", 1), ("y", -1)])),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn pythagoras() {
        let e = parse_expr("sin(x)^2 + cos(x)^2", &["x"]).unwrap();
        let mut p = Point::new();
        p.insert(Arc::from("x"), Rational::from((3, 7)));
        let v = evaluate(&e, &p).unwrap();
        assert!((v.to_f64() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn perfect_roots_stay_exact() {
        let e = parse_expr("sqrt(x*y)", &["x", "y"]).unwrap();
        let v = evaluate(&e, &pt(&[("x", 2), ("y", 8)])).unwrap();
        assert_eq!(v, Value::Exact(Rational::from(4)));
        let v = evaluate(&e, &pt(&[("x", 2), ("y", 3)])).unwrap();
        assert!(!v.is_exact());
    }

    #[test]
    fn domain_errors() {
        let e = parse_expr("log(x)", &["x"]).unwrap();
        assert!(evaluate(&e, &pt(&[("x", 0)])).is_err());
        let e = parse_expr("x^(1/2)", &["x"]).unwrap();
        assert!(evaluate(&e, &pt(&[("x", -4)])).is_err());
        assert!(evaluate(&e, &pt(&[])).is_err());
    }
}
