use std::fmt;

use rug::Rational;

use super::{Expr, Node};

fn write_rational(f: &mut fmt::Formatter<'_>, r: &Rational) -> fmt::Result {
    if *r.denom() == 1 {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

/// Bare atoms need no parentheses as a power base.
fn is_atom(e: &Expr) -> bool {
    match e.node() {
        Node::Var(_) | Node::Func(..) => true,
        Node::Const(c) => *c >= 0 && c.is_integer(),
        _ => false,
    }
}

fn write_base(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    if is_atom(e) {
        write!(f, "{}", e)
    } else {
        write!(f, "({})", e)
    }
}

fn write_power(f: &mut fmt::Formatter<'_>, base: &Expr, e: &Rational) -> fmt::Result {
    write_base(f, base)?;
    if e.is_integer() && *e > 0 {
        write!(f, "^{}", e.numer())
    } else {
        write!(f, "^(")?;
        write_rational(f, e)?;
        write!(f, ")")
    }
}

/// A factor inside a product; sums need parentheses.
fn write_factor(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e.node() {
        Node::Add(_) => write!(f, "({})", e),
        Node::Const(c) if *c < 0 => write!(f, "({})", e),
        _ => write!(f, "{}", e),
    }
}

fn write_product(f: &mut fmt::Formatter<'_>, fs: &[Expr]) -> fmt::Result {
    let (coeff, rest) = match fs[0].node() {
        Node::Const(c) => (Some(c.clone()), &fs[1..]),
        _ => (None, fs),
    };
    let mut num: Vec<Expr> = Vec::new();
    let mut den: Vec<Expr> = Vec::new();
    for g in rest {
        match g.node() {
            Node::Pow(b, e) if *e < 0 => {
                let pe = Rational::from(-e);
                den.push(if pe == 1 {
                    b.clone()
                } else {
                    Expr::from_node(Node::Pow(b.clone(), pe))
                });
            }
            _ => num.push(g.clone()),
        }
    }
    let mut started = false;
    if let Some(c) = coeff {
        if c == -1 && !num.is_empty() {
            write!(f, "-")?;
        } else {
            write_rational(f, &c)?;
            started = true;
        }
    }
    for g in &num {
        if started {
            write!(f, "*")?;
        }
        write_factor(f, g)?;
        started = true;
    }
    if !started {
        write!(f, "1")?;
    }
    // Each denominator factor gets its own '/', so a sum inside a product
    // is never re-expanded on reparse. A leading digit after '/' would lex
    // as part of a rational literal, hence the parentheses.
    for g in &den {
        write!(f, "/")?;
        let bare = match g.node() {
            Node::Var(_) | Node::Func(..) => true,
            Node::Pow(b, _) => matches!(b.node(), Node::Var(_) | Node::Func(..)),
            _ => false,
        };
        if bare {
            write!(f, "{}", g)?;
        } else {
            write!(f, "({})", g)?;
        }
    }
    Ok(())
}

fn is_negative_term(e: &Expr) -> bool {
    match e.node() {
        Node::Const(c) => *c < 0,
        Node::Mul(fs) => matches!(fs[0].node(), Node::Const(c) if *c < 0),
        _ => false,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => write_rational(f, c),
            Node::Var(v) => write!(f, "{}", v),
            Node::Add(ts) => {
                // Constants sort first; print them last for readability.
                let mut order: Vec<&Expr> = ts.iter().filter(|t| t.as_const().is_none()).collect();
                order.extend(ts.iter().filter(|t| t.as_const().is_some()));
                for (i, t) in order.iter().enumerate() {
                    if i == 0 {
                        write!(f, "{}", t)?;
                    } else if is_negative_term(t) {
                        write!(f, " - {}", -(*t).clone())?;
                    } else {
                        write!(f, " + {}", t)?;
                    }
                }
                Ok(())
            }
            Node::Mul(fs) => write_product(f, fs),
            Node::Pow(b, e) => {
                if *e < 0 {
                    write_product(f, std::slice::from_ref(self))
                } else {
                    write_power(f, b, e)
                }
            }
            Node::Func(k, a) => write!(f, "{}({})", k.name(), a),
        }
    }
}
