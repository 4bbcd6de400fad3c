//! Scalar PDE systems in two independent variables, in solved form.
//!
//! Jet coordinates are `x`, `y`, `u` and `u<i><j>` for `∂^{i+j}u/∂x^i∂y^j`.

mod prolong_field;
mod symbol;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{is_zero, Expr, SamplerConfig};
use crate::geom::{Chart, Distribution, VectorField};

pub use prolong_field::{jet_coordinates, prolong_vector_field};
pub use symbol::{
    characteristic_direction, characteristic_line, stabilize, symbol_profile, type_string,
    SymbolProfile,
};

pub type MultiIndex = (usize, usize);

pub fn coord_name(s: MultiIndex) -> String {
    if s == (0, 0) {
        "u".to_string()
    } else {
        format!("u{}{}", s.0, s.1)
    }
}

/// Inverse of [`coord_name`]; single-digit indices only.
pub fn parse_coord(name: &str) -> Option<MultiIndex> {
    if name == "u" {
        return Some((0, 0));
    }
    let rest = name.strip_prefix('u')?;
    let b = rest.as_bytes();
    if b.len() != 2 || !b.iter().all(u8::is_ascii_digit) {
        return None;
    }
    Some(((b[0] - b'0') as usize, (b[1] - b'0') as usize))
}

/// Multi-indices of total order `level`, `x`-heavy first.
pub fn level_indices(level: usize) -> impl Iterator<Item = MultiIndex> {
    (0..=level).rev().map(move |i| (i, level - i))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    X,
    Y,
}

impl Direction {
    fn step(self, s: MultiIndex) -> MultiIndex {
        match self {
            Direction::X => (s.0 + 1, s.1),
            Direction::Y => (s.0, s.1 + 1),
        }
    }

    fn var(self) -> &'static str {
        match self {
            Direction::X => "x",
            Direction::Y => "y",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PdeSystem {
    pub name: String,
    /// Current jet order.
    pub order: usize,
    /// Declared equations `u_σ = F_σ`.
    pub equations: BTreeMap<MultiIndex, Expr>,
    /// Every constrained coordinate up to `order`, in terms of internal coordinates.
    pub solved: BTreeMap<MultiIndex, Expr>,
    pub params: Vec<Arc<str>>,
}

impl PdeSystem {
    /// Builds the system level by level, adding the differential
    /// consequences of lower-order equations.
    pub fn new<S: AsRef<str>>(
        name: &str,
        equations: Vec<(MultiIndex, Expr)>,
        params: &[S],
    ) -> Result<PdeSystem> {
        if equations.is_empty() {
            return Err(Error::WrongShape(
                "a system needs at least one equation".into(),
            ));
        }
        let mut declared = BTreeMap::new();
        for (s, e) in equations {
            if s.0 + s.1 == 0 {
                return Err(Error::WrongShape(
                    "equations must have positive order".into(),
                ));
            }
            if declared.insert(s, e).is_some() {
                return Err(Error::WrongShape(format!(
                    "`{}` is solved for twice",
                    coord_name(s)
                )));
            }
        }
        let order = declared.keys().map(|s| s.0 + s.1).max().unwrap();
        let params: Vec<Arc<str>> = params.iter().map(|p| Arc::from(p.as_ref())).collect();
        for (s, e) in &declared {
            for v in e.free_vars() {
                let ok = match parse_coord(&v) {
                    Some(t) => t.0 + t.1 <= order && !declared.contains_key(&t),
                    None => &*v == "x" || &*v == "y" || params.contains(&v),
                };
                if !ok {
                    return Err(Error::WrongShape(format!(
                        "right-hand side of `{}` uses `{}`, which is not an internal coordinate or parameter",
                        coord_name(*s),
                        v
                    )));
                }
            }
        }
        let mut sys = PdeSystem {
            name: name.to_string(),
            order: 0,
            equations: declared.clone(),
            solved: BTreeMap::new(),
            params,
        };
        for level in 1..=order {
            let here: Vec<(MultiIndex, Expr)> = declared
                .iter()
                .filter(|(s, _)| s.0 + s.1 == level)
                .map(|(s, e)| (*s, e.clone()))
                .collect();
            sys.extend_level(here)?;
        }
        Ok(sys)
    }

    pub fn declared_orders(&self) -> Vec<usize> {
        self.equations.keys().map(|s| s.0 + s.1).collect()
    }

    pub fn is_constrained(&self, s: MultiIndex) -> bool {
        self.solved.contains_key(&s)
    }

    /// Unconstrained multi-indices at `level`.
    pub fn free_at(&self, level: usize) -> Vec<MultiIndex> {
        level_indices(level)
            .filter(|s| !self.solved.contains_key(s))
            .collect()
    }

    pub fn internal_coords(&self) -> Vec<String> {
        let mut out = vec!["x".to_string(), "y".to_string()];
        for level in 0..=self.order {
            out.extend(self.free_at(level).into_iter().map(coord_name));
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.internal_coords().len()
    }

    pub fn chart(&self) -> Chart {
        Chart::new(&self.name, &self.internal_coords()).expect("jet coordinates are distinct")
    }

    fn solved_bindings(&self) -> HashMap<String, Expr> {
        self.solved
            .iter()
            .map(|(s, e)| (coord_name(*s), e.clone()))
            .collect()
    }

    /// Replaces constrained coordinates by their defining expressions.
    pub fn reduce(&self, f: &Expr) -> Expr {
        let names = self.solved_bindings();
        let bind: HashMap<&str, Expr> =
            names.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
        f.substitute(&bind)
    }

    fn derivative_of_coord(&self, s: MultiIndex, dir: Direction, allow_next: bool) -> Result<Expr> {
        let t = dir.step(s);
        let level = t.0 + t.1;
        if level <= self.order {
            Ok(self
                .solved
                .get(&t)
                .cloned()
                .unwrap_or_else(|| Expr::var(&coord_name(t))))
        } else if allow_next && level == self.order + 1 {
            Ok(Expr::var(&coord_name(t)))
        } else {
            Err(Error::ExceedsJetOrder(coord_name(t)))
        }
    }

    fn total(&self, f: &Expr, dir: Direction, allow_next: bool) -> Result<Expr> {
        let f = self.reduce(f);
        let mut terms = Vec::new();
        for v in f.free_vars() {
            let d = f.diff(&v);
            if d.is_zero() {
                continue;
            }
            if &*v == dir.var() {
                terms.push(d);
            } else if let Some(s) = parse_coord(&v) {
                terms.push(d * self.derivative_of_coord(s, dir, allow_next)?);
            }
        }
        Ok(Expr::add_all(terms))
    }

    /// `D_x f` or `D_y f` restricted to the system.
    pub fn total_derivative(&self, f: &Expr, dir: Direction) -> Result<Expr> {
        self.total(f, dir, false)
    }

    /// Adds level `order + 1`: the differential consequences of the current
    /// top-level constraints plus `declared`.
    fn extend_level(&mut self, declared: Vec<(MultiIndex, Expr)>) -> Result<()> {
        let level = self.order + 1;
        let lower = self.solved_bindings();
        let lower_bind: HashMap<&str, Expr> =
            lower.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
        let mut s: BTreeMap<MultiIndex, Expr> = declared
            .into_iter()
            .map(|(k, e)| (k, e.substitute(&lower_bind)))
            .collect();
        let mut eqs: Vec<(MultiIndex, Expr)> = Vec::new();
        for (p, e) in self.solved.iter().filter(|(p, _)| p.0 + p.1 == self.order) {
            for dir in [Direction::X, Direction::Y] {
                let child = dir.step(*p);
                let rhs = self.total(e, dir, true)?;
                eqs.push((child, Expr::var(&coord_name(child)) - rhs));
            }
        }
        let cfg = SamplerConfig::default();
        for (child, e) in eqs {
            let names: Vec<(String, Expr)> =
                s.iter().map(|(k, v)| (coord_name(*k), v.clone())).collect();
            let bind: HashMap<&str, Expr> =
                names.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
            let e = e.substitute(&bind);
            let mut present: Vec<MultiIndex> = level_indices(level)
                .filter(|t| !s.contains_key(t) && e.contains_var(&coord_name(*t)))
                .collect();
            if present.is_empty() {
                if !is_zero(&e, &cfg)? {
                    return Err(Error::IncompatibleSystem(format!(
                        "two derivations of `{}` differ by {}",
                        coord_name(child),
                        e
                    )));
                }
                continue;
            }
            // solve for the equation's own coordinate when possible, then for
            // unknowns with simple coefficients
            present.sort_by_key(|t| {
                let a = e.diff(&coord_name(*t));
                (*t != child, a.as_const().is_none(), a.size())
            });
            let mut pivot = None;
            for t in present {
                let name = coord_name(t);
                let a = e.diff(&name);
                if a.contains_var(&name) || is_zero(&a, &cfg)? {
                    continue;
                }
                pivot = Some((t, name, a));
                break;
            }
            let Some((t, name, a)) = pivot else {
                if is_zero(&e, &cfg)? {
                    continue;
                }
                return Err(Error::NonlinearClosure(format!(
                    "compatibility condition {} = 0 is not linear in any top-order coordinate",
                    e
                )));
            };
            let sol = -(e.subs(&name, &Expr::zero())) / a;
            for v in s.values_mut() {
                *v = v.subs(&name, &sol);
            }
            s.insert(t, sol);
        }
        self.solved.extend(s);
        self.order = level;
        Ok(())
    }

    pub fn prolong(&self) -> Result<PdeSystem> {
        let mut next = self.clone();
        next.extend_level(Vec::new())?;
        Ok(next)
    }

    /// The internal coordinates an expression may use, plus parameters.
    pub fn allowed_symbols(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.internal_coords().into_iter().collect();
        out.extend(self.params.iter().map(|p| p.to_string()));
        out
    }
}

pub fn total_derivative(sys: &PdeSystem, f: &Expr, dir: Direction) -> Result<Expr> {
    sys.total_derivative(f, dir)
}

pub fn prolong_system(sys: &PdeSystem) -> Result<PdeSystem> {
    sys.prolong()
}

/// `⟨D_x, D_y, ∂_v⟩` on the internal coordinates, `v` the free top coordinate.
pub fn cartan_distribution(sys: &PdeSystem, cfg: &SamplerConfig) -> Result<Distribution> {
    let top = sys.free_at(sys.order);
    if top.len() != 1 {
        return Err(Error::NotStabilized(top.len()));
    }
    let chart = Arc::new(sys.chart());
    let mut gens = Vec::new();
    for dir in [Direction::X, Direction::Y] {
        let mut f = VectorField::zero(&chart);
        for (i, c) in chart.coords.iter().enumerate() {
            if &**c == dir.var() {
                f.coeffs[i] = Expr::one();
            } else if let Some(s) = parse_coord(c) {
                if s.0 + s.1 < sys.order {
                    f.coeffs[i] = sys.derivative_of_coord(s, dir, false)?;
                }
            }
        }
        gens.push(f);
    }
    gens.push(VectorField::coordinate(&chart, &coord_name(top[0]))?);
    Distribution::new(chart, gens, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    pub(crate) fn system(eqs: &[(&str, &str)], params: &[&str]) -> PdeSystem {
        let allow =
            |s: &str| s == "x" || s == "y" || parse_coord(s).is_some() || params.contains(&s);
        let eqs = eqs
            .iter()
            .map(|(k, e)| {
                (
                    parse_coord(k).unwrap(),
                    crate::expr::parse_expr_with(e, &allow).unwrap(),
                )
            })
            .collect();
        PdeSystem::new("test", eqs, params).unwrap()
    }

    pub(crate) fn eceq() -> PdeSystem {
        system(&[("u11", "1/2*u20^2"), ("u02", "1/3*u20^3")], &[])
    }

    fn pe(s: &str) -> Expr {
        crate::expr::parse_expr_with(s, &|_: &str| true).unwrap()
    }

    #[test]
    fn names() {
        assert_eq!(coord_name((0, 0)), "u");
        assert_eq!(coord_name((2, 1)), "u21");
        assert_eq!(parse_coord("u03"), Some((0, 3)));
        assert_eq!(parse_coord("u1"), None);
        assert_eq!(parse_coord("v"), None);
    }

    #[test]
    fn eceq_coordinates() {
        let s = eceq();
        assert_eq!(
            s.internal_coords(),
            vec!["x", "y", "u", "u10", "u01", "u20"]
        );
        let d = total_derivative(&s, &pe("x*u"), Direction::X).unwrap();
        assert!(is_zero(&(d - pe("u + x*u10")), &SamplerConfig::default()).unwrap());
        assert!(matches!(
            total_derivative(&s, &pe("u11"), Direction::X),
            Err(Error::ExceedsJetOrder(_))
        ));
    }

    #[test]
    fn eceq_prolongs() {
        let cfg = SamplerConfig::default();
        let p = eceq().prolong().unwrap();
        assert_eq!(p.free_at(3), vec![(3, 0)]);
        for (s, want) in [
            ((2, 1), "u20*u30"),
            ((1, 2), "u20^2*u30"),
            ((0, 3), "u20^3*u30"),
        ] {
            assert!(
                is_zero(&(&p.solved[&s] - pe(want)), &cfg).unwrap(),
                "{:?}",
                s
            );
        }
        let d = total_derivative(&p, &pe("u11"), Direction::X).unwrap();
        assert!(is_zero(&(d - pe("u20*u30")), &cfg).unwrap());
    }

    #[test]
    fn incompatible() {
        let eqs = vec![
            ((2, 0), parse_expr("y", &["y"]).unwrap()),
            ((1, 1), Expr::zero()),
        ];
        let s = PdeSystem::new("bad", eqs, &[] as &[&str]).unwrap();
        assert!(matches!(s.prolong(), Err(Error::IncompatibleSystem(_))));
    }

    #[test]
    fn rhs_validated() {
        let r = PdeSystem::new(
            "bad",
            vec![((1, 1), pe("u20")), ((2, 0), pe("u11"))],
            &[] as &[&str],
        );
        assert!(matches!(r, Err(Error::WrongShape(_))));
    }

    #[test]
    fn total_derivatives_commute() {
        let cfg = SamplerConfig::default();
        let p = eceq().prolong().unwrap().prolong().unwrap();
        for f in ["u10*u20", "x*u01 + u^2", "u20^3"] {
            let f = pe(f);
            let xy = p
                .total_derivative(&p.total_derivative(&f, Direction::X).unwrap(), Direction::Y)
                .unwrap();
            let yx = p
                .total_derivative(&p.total_derivative(&f, Direction::Y).unwrap(), Direction::X)
                .unwrap();
            assert!(is_zero(&(xy - yx), &cfg).unwrap());
        }
    }

    #[test]
    fn eceq_cartan() {
        let cfg = SamplerConfig::default();
        let d = cartan_distribution(&eceq(), &cfg).unwrap();
        assert_eq!(d.rank(), 3);
        assert_eq!(d.dim(), 6);
        assert_eq!(
            d.generators[0].to_string(),
            "∂x + u10*∂u + u20*∂u10 + 1/2*u20^2*∂u01"
        );
        let bad = system(&[("u11", "u20")], &[]);
        assert!(matches!(
            cartan_distribution(&bad, &cfg),
            Err(Error::NotStabilized(2))
        ));
    }

    #[test]
    fn gas_dynamics() {
        let s = system(&[("u01", "u*u10")], &[]);
        assert_eq!(s.internal_coords(), vec!["x", "y", "u", "u10"]);
        let d = cartan_distribution(&s, &SamplerConfig::default()).unwrap();
        assert_eq!(d.rank(), 3);
    }
}
