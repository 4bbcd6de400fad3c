//! Charts, vector fields and distributions, plus the operations built on them.

mod carnot;
mod cauchy;
mod coords;
mod flag;
mod goursat;
mod monge;
mod symmetry;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use rug::Rational;

use crate::error::{Error, Result};
use crate::expr::{fingerprint, salt_of, Expr, Point, Sampler, SamplerConfig, Value};
use crate::linalg::{self, ExprMatrix};

pub use carnot::{carnot_algebra, CarnotAlgebra};
pub use cauchy::{
    cauchy_characteristics, default_slice, deprolong, reduce_at_default_slice, restrict_to_level,
    transversal_reduction, Deprolongation, Restriction,
};
pub use coords::{
    change_coordinates, integrable_extension_check, integrable_extension_check_mapped,
};
pub use flag::{derived_flag, Flag, FlagMode};
pub use goursat::{goursat_verdict, GoursatVerdict};
pub use monge::{monge_invariants, MongeInvariants};
pub use symmetry::{
    first_integral_check, solvable_transversal_check, symmetry_check, SolvableReport, SymmetryMode,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub name: String,
    pub coords: Vec<Arc<str>>,
    pub base_point: Option<Point>,
}

impl Chart {
    pub fn new<S: AsRef<str>>(name: &str, coords: &[S]) -> Result<Chart> {
        let coords: Vec<Arc<str>> = coords.iter().map(|c| Arc::from(c.as_ref())).collect();
        let distinct: BTreeSet<&Arc<str>> = coords.iter().collect();
        if distinct.len() != coords.len() {
            return Err(Error::WrongShape(
                "coordinate names must be distinct".into(),
            ));
        }
        Ok(Chart {
            name: name.to_string(),
            coords,
            base_point: None,
        })
    }

    pub fn with_base_point(mut self, p: Point) -> Result<Chart> {
        for c in &self.coords {
            if !p.contains_key(c) {
                return Err(Error::WrongShape(format!(
                    "base point does not bind `{}`",
                    c
                )));
            }
        }
        self.base_point = Some(p);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| &**c == name)
    }

    pub fn same_coords(&self, other: &Chart) -> bool {
        self.coords == other.coords
    }

    /// The chart with `coord` removed.
    pub fn without(&self, coord: &str) -> Chart {
        Chart {
            name: self.name.clone(),
            coords: self
                .coords
                .iter()
                .filter(|c| &***c != coord)
                .cloned()
                .collect(),
            base_point: self.base_point.as_ref().map(|p| {
                p.iter()
                    .filter(|(k, _)| &***k != coord)
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect()
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VectorField {
    pub chart: Arc<Chart>,
    pub coeffs: Vec<Expr>,
}

impl PartialEq for VectorField {
    fn eq(&self, other: &Self) -> bool {
        self.chart.same_coords(&other.chart) && self.coeffs == other.coeffs
    }
}

impl VectorField {
    pub fn new(chart: Arc<Chart>, coeffs: Vec<Expr>) -> Result<VectorField> {
        if coeffs.len() != chart.dim() {
            return Err(Error::WrongShape(format!(
                "field has {} coefficients on a {}-dimensional chart",
                coeffs.len(),
                chart.dim()
            )));
        }
        Ok(VectorField { chart, coeffs })
    }

    pub fn zero(chart: &Arc<Chart>) -> VectorField {
        VectorField {
            chart: chart.clone(),
            coeffs: vec![Expr::zero(); chart.dim()],
        }
    }

    /// The coordinate field `∂/∂name`.
    pub fn coordinate(chart: &Arc<Chart>, name: &str) -> Result<VectorField> {
        let i = chart
            .index_of(name)
            .ok_or_else(|| Error::ChartMismatch(format!("no coordinate `{}`", name)))?;
        let mut f = VectorField::zero(chart);
        f.coeffs[i] = Expr::one();
        Ok(f)
    }

    /// Builds from `(coordinate, coefficient)` pairs; missing ones are zero.
    pub fn from_pairs(chart: &Arc<Chart>, pairs: &[(&str, Expr)]) -> Result<VectorField> {
        let mut f = VectorField::zero(chart);
        for (name, e) in pairs {
            let i = chart
                .index_of(name)
                .ok_or_else(|| Error::ChartMismatch(format!("no coordinate `{}`", name)))?;
            f.coeffs[i] = e.clone();
        }
        Ok(f)
    }

    pub fn coeff(&self, name: &str) -> Option<&Expr> {
        self.chart.index_of(name).map(|i| &self.coeffs[i])
    }

    /// Directional derivative `X(f)`.
    pub fn apply(&self, f: &Expr) -> Expr {
        let mut terms = Vec::new();
        for (c, x) in self.chart.coords.iter().zip(&self.coeffs) {
            if x.is_zero() || !f.may_contain(c) {
                continue;
            }
            let d = f.diff(c);
            if !d.is_zero() {
                terms.push(x * &d);
            }
        }
        Expr::add_all(terms)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Expr::is_zero)
    }

    pub fn scale(&self, f: &Expr) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            coeffs: self.coeffs.iter().map(|c| c * f).collect(),
        }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn neg(&self) -> VectorField {
        self.scale(&Expr::int(-1))
    }

    pub fn substitute(&self, bindings: &HashMap<&str, Expr>) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            coeffs: self.coeffs.iter().map(|c| c.substitute(bindings)).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.coeffs.iter().map(Expr::size).sum()
    }

    pub fn vars(&self) -> BTreeSet<Arc<str>> {
        let mut v = BTreeSet::new();
        for c in &self.coeffs {
            c.collect_vars(&mut v);
        }
        v
    }

    pub(crate) fn fingerprint(&self) -> u64 {
        self.coeffs.iter().fold(self.coeffs.len() as u64, |h, e| {
            h.rotate_left(9) ^ fingerprint(e)
        })
    }

    /// Certified zero test of every coefficient.
    pub fn is_zero_certified(&self, cfg: &SamplerConfig) -> Result<bool> {
        crate::expr::is_zero_all(&self.coeffs, cfg)
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (c, e) in self.chart.coords.iter().zip(&self.coeffs) {
            if e.is_zero() {
                continue;
            }
            let term = if e.is_one() {
                format!("∂{}", c)
            } else if (-e).is_one() {
                format!("-∂{}", c)
            } else if matches!(e.node(), crate::expr::Node::Add(_)) {
                format!("({})*∂{}", e, c)
            } else {
                format!("{}*∂{}", e, c)
            };
            if first {
                write!(f, "{}", term)?;
            } else if let Some(rest) = term.strip_prefix('-') {
                write!(f, " - {}", rest)?;
            } else {
                write!(f, " + {}", term)?;
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// `[X, Y]` with coefficients `X(Y_i) - Y(X_i)`.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField> {
    if !x.chart.same_coords(&y.chart) {
        return Err(Error::ChartMismatch(
            "bracket of fields on different charts".into(),
        ));
    }
    let coeffs = x
        .coeffs
        .iter()
        .zip(&y.coeffs)
        .map(|(xi, yi)| x.apply(yi) - y.apply(xi))
        .collect();
    Ok(VectorField {
        chart: x.chart.clone(),
        coeffs,
    })
}

#[derive(Debug, Clone)]
pub struct Distribution {
    pub chart: Arc<Chart>,
    pub generators: Vec<VectorField>,
}

impl Distribution {
    /// Validates that the generators are pointwise independent at generic points.
    pub fn new(
        chart: Arc<Chart>,
        generators: Vec<VectorField>,
        cfg: &SamplerConfig,
    ) -> Result<Distribution> {
        for g in &generators {
            if !g.chart.same_coords(&chart) {
                return Err(Error::ChartMismatch(
                    "generator on a different chart".into(),
                ));
            }
        }
        let d = Distribution { chart, generators };
        let rank = linalg::generic_rank(&d.matrix(), cfg)?;
        if rank < d.rank() {
            return Err(Error::DependentGenerators {
                rank,
                count: d.rank(),
            });
        }
        Ok(d)
    }

    pub(crate) fn new_unchecked(chart: Arc<Chart>, generators: Vec<VectorField>) -> Distribution {
        Distribution { chart, generators }
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn matrix(&self) -> ExprMatrix {
        ExprMatrix::from_rows(
            self.generators.iter().map(|g| g.coeffs.clone()).collect(),
            self.dim(),
        )
    }

    pub(crate) fn fingerprint(&self) -> u64 {
        self.generators
            .iter()
            .fold(0x9e37, |h, g| h.rotate_left(13) ^ g.fingerprint())
    }

    /// Generic rank of the generators together with `extra`.
    pub fn rank_with(&self, extra: &[VectorField], cfg: &SamplerConfig) -> Result<usize> {
        let mut fields: Vec<&VectorField> = self.generators.iter().collect();
        fields.extend(extra);
        let probe = Probe::new(&self.chart, &fields, cfg, "rank_with")?;
        let evals: Vec<Evaluated> = fields.iter().map(|f| probe.eval(f)).collect();
        probe.rank(&evals.iter().collect::<Vec<_>>())
    }

    /// Certifies that `v` lies in the span of the generators.
    pub fn contains(&self, v: &VectorField, cfg: &SamplerConfig) -> Result<bool> {
        if v.is_zero() {
            return Ok(true);
        }
        let mut fields: Vec<&VectorField> = self.generators.iter().collect();
        fields.push(v);
        let probe = Probe::new(&self.chart, &fields, cfg, "contains")?;
        let evals: Vec<Evaluated> = fields.iter().map(|f| probe.eval(f)).collect();
        let all: Vec<&Evaluated> = evals.iter().collect();
        Ok(probe.rank(&all)? == probe.rank(&all[..all.len() - 1])?)
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨")?;
        for (i, g) in self.generators.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", g)?;
        }
        write!(f, "⟩")
    }
}

/// Values of a field at each probe point; `None` where evaluation failed.
pub(crate) type Evaluated = Vec<Option<Vec<Value>>>;

/// A fixed set of random points used for a family of rank tests.
pub(crate) struct Probe {
    points: Vec<Point>,
    seed: u64,
}

impl Probe {
    /// Samples `cfg.trials` points at which all `fields` evaluate.
    pub fn new(
        chart: &Chart,
        fields: &[&VectorField],
        cfg: &SamplerConfig,
        label: &str,
    ) -> Result<Probe> {
        let mut vars: BTreeSet<Arc<str>> = chart.coords.iter().cloned().collect();
        for f in fields {
            for c in &f.coeffs {
                c.collect_vars(&mut vars);
            }
        }
        let rows: Vec<Vec<Expr>> = fields.iter().map(|f| f.coeffs.clone()).collect();
        let salt = fields
            .iter()
            .fold(salt_of(label), |h, f| h.rotate_left(11) ^ f.fingerprint());
        let pts = linalg::sample_points(&vars, &rows, cfg, salt, cfg.trials.max(1))?;
        Ok(Probe {
            points: pts.into_iter().map(|(p, _)| p).collect(),
            seed: cfg.seed ^ salt,
        })
    }

    /// A probe at given points.
    pub fn at(points: Vec<Point>) -> Probe {
        Probe { points, seed: 0 }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    fn complete(&self, idx: usize, vars: &BTreeSet<Arc<str>>) -> std::borrow::Cow<'_, Point> {
        let p = &self.points[idx];
        let missing: Vec<&Arc<str>> = vars.iter().filter(|v| !p.contains_key(*v)).collect();
        if missing.is_empty() {
            return std::borrow::Cow::Borrowed(p);
        }
        let mut q = p.clone();
        for v in missing {
            let cfg = SamplerConfig {
                seed: self.seed ^ idx as u64,
                ..Default::default()
            };
            let r: Rational = Sampler::new(&cfg, salt_of(v)).rational();
            q.insert(v.clone(), r);
        }
        std::borrow::Cow::Owned(q)
    }

    pub fn eval_exprs(&self, es: &[Expr]) -> Evaluated {
        let mut vars = BTreeSet::new();
        for e in es {
            e.collect_vars(&mut vars);
        }
        (0..self.points.len())
            .map(|i| {
                let p = self.complete(i, &vars);
                es.iter()
                    .map(|e| crate::expr::evaluate(e, &p))
                    .collect::<Result<Vec<_>>>()
                    .ok()
            })
            .collect()
    }

    pub fn eval(&self, f: &VectorField) -> Evaluated {
        self.eval_exprs(&f.coeffs)
    }

    /// Rank at each point where every row evaluated.
    pub fn spectrum(&self, rows: &[&Evaluated]) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for i in 0..self.points.len() {
            let vals: Option<Vec<Vec<Value>>> = rows.iter().map(|r| r[i].clone()).collect();
            if let Some(vals) = vals {
                out.push(if vals.is_empty() {
                    0
                } else {
                    linalg::numeric_rank(&vals)?
                });
            }
        }
        Ok(out)
    }

    /// Maximum rank over the probe points.
    pub fn rank(&self, rows: &[&Evaluated]) -> Result<usize> {
        if rows.is_empty() {
            return Ok(0);
        }
        let s = self.spectrum(rows)?;
        s.into_iter()
            .max()
            .ok_or_else(|| Error::SamplingExhausted("no probe point admits every field".into()))
    }
}

/// Greedily picks a maximal independent subset, trying small fields first,
/// and returns it in the original order.
pub(crate) fn select_basis(
    chart: &Arc<Chart>,
    candidates: &[VectorField],
    cfg: &SamplerConfig,
    label: &str,
) -> Result<Vec<VectorField>> {
    let live: Vec<&VectorField> = candidates.iter().filter(|f| !f.is_zero()).collect();
    if live.is_empty() {
        return Ok(Vec::new());
    }
    let probe = Probe::new(chart, &live, cfg, label)?;
    let evals: Vec<Evaluated> = live.iter().map(|f| probe.eval(f)).collect();
    let mut order: Vec<usize> = (0..live.len()).collect();
    order.sort_by_key(|&i| live[i].size());
    let mut chosen: Vec<usize> = Vec::new();
    let mut rank = 0;
    for i in order {
        let mut rows: Vec<&Evaluated> = chosen.iter().map(|&j| &evals[j]).collect();
        rows.push(&evals[i]);
        let r = probe.rank(&rows)?;
        if r > rank {
            rank = r;
            chosen.push(i);
        }
    }
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| live[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    pub(crate) fn field(chart: &Arc<Chart>, coeffs: &[&str]) -> VectorField {
        let names: Vec<&str> = chart.coords.iter().map(|c| &**c).collect();
        VectorField::new(
            chart.clone(),
            coeffs
                .iter()
                .map(|s| parse_expr(s, &names).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn brackets() {
        let ch = Arc::new(Chart::new("R3", &["x", "y", "z"]).unwrap());
        let dx = field(&ch, &["1", "0", "0"]);
        let dy = field(&ch, &["0", "1", "0"]);
        let h = field(&ch, &["0", "1", "x"]);
        assert!(lie_bracket(&dx, &dy).unwrap().is_zero());
        assert_eq!(lie_bracket(&dx, &h).unwrap(), field(&ch, &["0", "0", "1"]));
    }

    #[test]
    fn hilbert_cartan_bracket() {
        let ch = Arc::new(Chart::new("HC", &["x", "z", "z1", "z2", "w"]).unwrap());
        let x = field(&ch, &["1", "z1", "z2", "0", "z2^2"]);
        let d = field(&ch, &["0", "0", "0", "1", "0"]);
        assert_eq!(
            lie_bracket(&x, &d).unwrap(),
            field(&ch, &["0", "0", "-1", "0", "-2*z2"])
        );
    }

    #[test]
    fn mismatched_charts() {
        let a = Arc::new(Chart::new("a", &["x"]).unwrap());
        let b = Arc::new(Chart::new("b", &["y"]).unwrap());
        let e = lie_bracket(&field(&a, &["1"]), &field(&b, &["1"]));
        assert!(matches!(e, Err(Error::ChartMismatch(_))));
    }

    #[test]
    fn dependent_generators_rejected() {
        let cfg = SamplerConfig::default();
        let ch = Arc::new(Chart::new("R2", &["x", "y"]).unwrap());
        let r = Distribution::new(
            ch.clone(),
            vec![field(&ch, &["x", "y"]), field(&ch, &["1", "y/x"])],
            &cfg,
        );
        assert!(matches!(
            r,
            Err(Error::DependentGenerators { rank: 1, count: 2 })
        ));
    }

    #[test]
    fn display() {
        let ch = Arc::new(Chart::new("R3", &["x", "y", "z"]).unwrap());
        assert_eq!(
            field(&ch, &["1", "-x", "y+1"]).to_string(),
            "∂x - x*∂y + (y + 1)*∂z"
        );
    }
}
