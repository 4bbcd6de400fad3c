use std::collections::BTreeMap;

use serde::Serialize;

use super::{coord_name, parse_coord, PdeSystem};
use crate::error::{Error, Result};
use crate::expr::{is_zero, Expr, SamplerConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymbolProfile {
    pub g_dims: Vec<usize>,
    /// Stabilization order.
    pub t: usize,
    pub kappa: usize,
    pub omega: usize,
    pub type_string: String,
}

fn subscript(n: usize) -> String {
    n.to_string()
        .chars()
        .map(|c| char::from_u32(0x2080 + c.to_digit(10).unwrap()).unwrap())
        .collect()
}

/// `Σ m_i E_i` from the declared equation orders, e.g. `2E₃` or `E₂ + E₃`.
pub fn type_string(orders: &[usize]) -> String {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &k in orders {
        *counts.entry(k).or_default() += 1;
    }
    counts
        .iter()
        .map(|(k, m)| {
            if *m == 1 {
                format!("E{}", subscript(*k))
            } else {
                format!("{}E{}", m, subscript(*k))
            }
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

/// Expected `dim g_i` for generic equations of the given orders.
fn formula(orders: &[usize], i: usize) -> usize {
    let lost: usize = orders.iter().map(|&k| (i + 1).saturating_sub(k)).sum();
    ((i + 1).saturating_sub(lost)).max(1)
}

/// Prolongs until the symbol stabilizes at dimension one, cross-checking
/// the free-coordinate counts against the generic formula at every level.
/// Returns the system at the stabilization order.
pub fn stabilize(sys: &PdeSystem) -> Result<(PdeSystem, SymbolProfile)> {
    let orders = sys.declared_orders();
    let max_k = *orders.iter().max().expect("systems have equations");
    let mut cur = sys.clone();
    let mut g_dims: Vec<usize> = Vec::new();
    let mut i = 0;
    let t = loop {
        while cur.order < i {
            cur = cur.prolong()?;
        }
        let actual = cur.free_at(i).len();
        if actual == 0 {
            return Err(Error::FiniteType);
        }
        let want = formula(&orders, i);
        if actual != want {
            return Err(Error::InconsistentWithProlongation {
                level: i,
                formula: want,
                actual,
            });
        }
        g_dims.push(actual);
        if i >= max_k && actual == 1 {
            break i;
        }
        if i > max_k && g_dims[i - 1] == actual {
            return Err(Error::NotClassOne(format!(
                "symbol dimension stabilizes at {}",
                actual
            )));
        }
        i += 1;
    };
    // one more level confirms the stabilization
    let next = if cur.order > t {
        cur.clone()
    } else {
        cur.prolong()?
    };
    let after = next.free_at(t + 1).len();
    if after == 0 {
        return Err(Error::FiniteType);
    }
    if after != 1 {
        return Err(Error::InconsistentWithProlongation {
            level: t + 1,
            formula: 1,
            actual: after,
        });
    }
    let kappa = g_dims.iter().map(|g| g - 1).sum();
    let profile = SymbolProfile {
        g_dims,
        t,
        kappa,
        omega: 1,
        type_string: type_string(&orders),
    };
    Ok((cur, profile))
}

pub fn symbol_profile(sys: &PdeSystem) -> Result<SymbolProfile> {
    Ok(stabilize(sys)?.1)
}

/// Polynomial in `μ = ξ_y/ξ_x`, lowest degree first.
type Poly = Vec<Expr>;

fn trim(mut p: Poly, cfg: &SamplerConfig) -> Result<Poly> {
    while let Some(last) = p.last() {
        if last.is_zero() || is_zero(last, cfg)? {
            p.pop();
        } else {
            break;
        }
    }
    Ok(p)
}

fn remainder(mut a: Poly, b: &Poly, cfg: &SamplerConfig) -> Result<Poly> {
    let db = b.len() - 1;
    let lead = b[db].recip();
    while a.len() > db {
        let shift = a.len() - 1 - db;
        let f = &a[a.len() - 1] * &lead;
        for (i, bi) in b.iter().enumerate().take(db) {
            a[i + shift] = &a[i + shift] - &(&f * bi);
        }
        a.pop();
        a = trim(a, cfg)?;
    }
    Ok(a)
}

/// Common characteristic of the declared equations as a field
/// `a·D_x + b·D_y`: `(−λ, 1)` for a finite slope `ξ_y = λ ξ_x`, `(1, 0)` when
/// the symbols share the factor `ξ_x`.
pub fn characteristic_direction(sys: &PdeSystem, cfg: &SamplerConfig) -> Result<(Expr, Expr)> {
    let mut forms: Vec<(usize, Poly)> = Vec::new();
    for (s, e) in &sys.equations {
        let k = s.0 + s.1;
        let mut p = vec![Expr::zero(); k + 1];
        p[s.1] = Expr::one();
        for v in e.free_vars() {
            if let Some(t) = parse_coord(&v) {
                if t.0 + t.1 == k {
                    p[t.1] = &p[t.1] - &e.diff(&coord_name(t));
                }
            }
        }
        forms.push((k, trim(p, cfg)?));
    }
    // a common factor ξ_x shows up as a common drop in μ-degree
    let xi_x = forms
        .iter()
        .map(|(k, p)| k + 1 - p.len())
        .min()
        .unwrap_or(0);
    let mut polys: Vec<Poly> = forms.into_iter().map(|(_, p)| p).collect();
    polys.sort_by_key(Vec::len);
    let mut g = polys[0].clone();
    for p in &polys[1..] {
        let mut a = p.clone();
        let mut b = g;
        while !b.is_empty() {
            let r = remainder(a, &b, cfg)?;
            a = b;
            b = r;
        }
        g = a;
    }
    let degree = xi_x + g.len().saturating_sub(1);
    match degree {
        0 => Err(Error::FiniteType),
        1 if xi_x == 1 => Ok((Expr::one(), Expr::zero())),
        1 => Ok((&g[0] / &g[1], Expr::one())),
        d => Err(Error::NotClassOne(format!(
            "characteristic divisor has degree {}",
            d
        ))),
    }
}

/// Slope `λ` of the common characteristic `ξ_y = λ ξ_x` of the declared
/// equations, from the GCD of their symbols.
pub fn characteristic_line(sys: &PdeSystem, cfg: &SamplerConfig) -> Result<Expr> {
    let (a, b) = characteristic_direction(sys, cfg)?;
    if b.is_zero() {
        return Err(Error::WrongShape(
            "characteristic is ξ_x = 0; exchange x and y to get a finite slope".into(),
        ));
    }
    Ok(-a)
}

#[cfg(test)]
mod tests {
    use super::super::tests::{eceq, system};
    use super::*;

    #[test]
    fn types() {
        assert_eq!(type_string(&[2, 2]), "2E₂");
        assert_eq!(type_string(&[3, 2]), "E₂ + E₃");
    }

    #[test]
    fn eceq_profile() {
        let (s, p) = stabilize(&eceq()).unwrap();
        assert_eq!(p.g_dims, vec![1, 2, 1]);
        assert_eq!((p.t, p.kappa, p.omega), (2, 1, 1));
        assert_eq!(p.type_string, "2E₂");
        assert_eq!(s.dim(), p.kappa + p.t + 3);
    }

    #[test]
    fn two_e_three_needs_prolongation() {
        let sys = system(&[("u30", "1/4*u03^4"), ("u12", "1/2*u03^2")], &[]);
        let (s, p) = stabilize(&sys).unwrap();
        assert_eq!(p.g_dims, vec![1, 2, 3, 2, 1]);
        assert_eq!((p.t, p.kappa), (4, 4));
        assert_eq!(s.order, 4);
        assert_eq!(s.dim(), 11);
    }

    #[test]
    fn not_class_one() {
        let sys = system(&[("u20", "0")], &[]);
        assert!(matches!(symbol_profile(&sys), Err(Error::NotClassOne(_))));
        let fin = system(&[("u20", "0"), ("u02", "0")], &[]);
        assert!(matches!(symbol_profile(&fin), Err(Error::FiniteType)));
    }

    #[test]
    fn eceq_line() {
        let cfg = SamplerConfig::default();
        let l = characteristic_line(&eceq(), &cfg).unwrap();
        assert!(is_zero(&(l - Expr::var("u20")), &cfg).unwrap());
        let fin = system(&[("u20", "0"), ("u02", "0")], &[]);
        assert!(matches!(
            characteristic_line(&fin, &cfg),
            Err(Error::FiniteType)
        ));
        let hyp = system(&[("u11", "0")], &[]);
        assert!(matches!(
            characteristic_line(&hyp, &cfg),
            Err(Error::NotClassOne(_))
        ));
    }

    #[test]
    fn ctsm_line_generic_m() {
        let cfg = SamplerConfig::default();
        let sys = system(
            &[("u11", "u20^m"), ("u02", "m^2/(2*m - 1)*u20^(2*m - 1)")],
            &["m"],
        );
        let l = characteristic_line(&sys, &cfg).unwrap();
        let want = crate::expr::parse_expr("m*u20^(m - 1)", &["m", "u20"]).unwrap();
        assert!(is_zero(&(l - want), &cfg).unwrap());
    }
}
