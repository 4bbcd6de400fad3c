use std::collections::HashMap;
use std::sync::Arc;

use rug::Rational;

use super::flag::{flag_prefix, FlagMode};
use super::symmetry::first_integral_check;
use super::{lie_bracket, select_basis, Chart, Distribution, VectorField};
use crate::error::{Error, Result};
use crate::expr::{is_zero, salt_of, Expr, SamplerConfig};
use crate::linalg::{self, determinant, ExprMatrix};

/// `Ch(Δ) = {X ∈ Δ : [X, Δ] ⊆ Δ}`.
///
/// With `X = Σ a_i G_i` the condition `[X, G_j] ∈ Δ` reads
/// `Σ a_i [G_i, G_j] ≡ 0 mod Δ`, which is linear in the `a_i`. Residuals
/// modulo Δ are the maximal minors of `[G; V]` through a fixed set of pivot
/// columns plus one extra column.
pub fn cauchy_characteristics(d: &Distribution, cfg: &SamplerConfig) -> Result<Distribution> {
    let r = d.rank();
    let n = d.dim();
    if r == 0 || r == n {
        return Ok(d.clone());
    }
    let m = d.matrix();
    let (_, ech) = linalg::best_point(&m, cfg, salt_of("cauchy") ^ d.fingerprint())?;
    if ech.rank < r {
        return Err(Error::DependentGenerators {
            rank: ech.rank,
            count: r,
        });
    }
    let pivots = ech.pivot_cols.clone();
    let grows = m.row_vecs();
    let all_rows: Vec<usize> = (0..r).collect();

    // residual_c(V) = Σ_k (-1)^k V[S_k] * minor_k, with S = pivots ∪ {c}
    let mut residuals: Vec<(Vec<usize>, Vec<Expr>)> = Vec::new();
    for c in (0..n).filter(|c| !pivots.contains(c)) {
        let mut s = pivots.clone();
        s.push(c);
        s.sort_unstable();
        let minors = (0..s.len())
            .map(|k| {
                let cols: Vec<usize> = s
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != k)
                    .map(|(_, &v)| v)
                    .collect();
                let mk = determinant(&grows, &all_rows, &cols);
                if k % 2 == 0 {
                    mk
                } else {
                    -mk
                }
            })
            .collect();
        residuals.push((s, minors));
    }
    let residual = |v: &VectorField, s: &[usize], minors: &[Expr]| -> Expr {
        Expr::add_all(
            s.iter()
                .zip(minors)
                .filter(|(&col, _)| !v.coeffs[col].is_zero())
                .map(|(&col, mk)| &v.coeffs[col] * mk),
        )
    };

    let mut brackets: HashMap<(usize, usize), VectorField> = HashMap::new();
    for i in 0..r {
        for j in i + 1..r {
            brackets.insert((i, j), lie_bracket(&d.generators[i], &d.generators[j])?);
        }
    }
    let mut rows: Vec<Vec<Expr>> = Vec::new();
    for j in 0..r {
        for (s, minors) in &residuals {
            let row: Vec<Expr> = (0..r)
                .map(|i| {
                    if i == j {
                        Expr::zero()
                    } else if i < j {
                        residual(&brackets[&(i, j)], s, minors)
                    } else {
                        -residual(&brackets[&(j, i)], s, minors)
                    }
                })
                .collect();
            if !row.iter().all(Expr::is_zero) {
                rows.push(row);
            }
        }
    }
    let kernel = linalg::kernel_basis(&ExprMatrix::from_rows(rows, r), cfg)?;
    let single = kernel.len() == 1;
    let mut fields = Vec::with_capacity(kernel.len());
    for a in kernel {
        let mut x = VectorField::zero(&d.chart);
        for (ai, g) in a.iter().zip(&d.generators) {
            if !ai.is_zero() {
                x = x.add(&g.scale(ai));
            }
        }
        if single {
            x = normalize_first(&x, cfg)?;
        }
        for g in &d.generators {
            if !d.contains(&lie_bracket(&x, g)?, cfg)? {
                return Err(Error::CertificationFailed(
                    "characteristic candidate does not preserve the distribution".into(),
                ));
            }
        }
        fields.push(x);
    }
    Ok(Distribution::new_unchecked(d.chart.clone(), fields))
}

/// Scales `x` so that its first nonzero coefficient is 1.
fn normalize_first(x: &VectorField, cfg: &SamplerConfig) -> Result<VectorField> {
    for (i, c) in x.coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        if c.is_one() {
            return Ok(x.clone());
        }
        if !is_zero(c, cfg)? {
            let mut y = x.scale(&c.recip());
            y.coeffs[i] = Expr::one();
            return Ok(y);
        }
    }
    Ok(x.clone())
}

/// Default slice for a transversal reduction along `xi`: the first
/// coordinate whose coefficient is a nonzero constant, else the first with
/// a certified-nonzero coefficient. The value comes from the base point, or 0.
pub fn default_slice(
    chart: &Chart,
    xi: &VectorField,
    cfg: &SamplerConfig,
) -> Result<(String, Rational)> {
    let value = |c: &str| {
        chart
            .base_point
            .as_ref()
            .and_then(|p| p.get(c).cloned())
            .unwrap_or_default()
    };
    for (c, e) in chart.coords.iter().zip(&xi.coeffs) {
        if e.as_const().is_some_and(|k| *k != 0) {
            return Ok((c.to_string(), value(c)));
        }
    }
    for (c, e) in chart.coords.iter().zip(&xi.coeffs) {
        if !is_zero(e, cfg)? {
            return Ok((c.to_string(), value(c)));
        }
    }
    Err(Error::ZeroTransversalCoefficient("every coordinate".into()))
}

/// Quotient by `xi` realized on the slice `coord = value`.
pub fn transversal_reduction(
    d: &Distribution,
    xi: &VectorField,
    coord: &str,
    value: &Rational,
    cfg: &SamplerConfig,
) -> Result<Distribution> {
    let idx = d
        .chart
        .index_of(coord)
        .ok_or_else(|| Error::ChartMismatch(format!("no coordinate `{}`", coord)))?;
    if !xi.chart.same_coords(&d.chart) {
        return Err(Error::ChartMismatch("field on a different chart".into()));
    }
    if !d.contains(xi, cfg)? {
        return Err(Error::NotInDistribution);
    }
    let xc = &xi.coeffs[idx];
    if is_zero(xc, cfg)? {
        return Err(Error::ZeroTransversalCoefficient(coord.to_string()));
    }
    let unit = xi.scale(&xc.recip());
    let chart = Arc::new(d.chart.without(coord));
    let mut bind = HashMap::new();
    bind.insert(coord, Expr::constant(value.clone()));
    let candidates: Vec<VectorField> = d
        .generators
        .iter()
        .map(|g| {
            let gc = &g.coeffs[idx];
            let g2 = if gc.is_zero() {
                g.clone()
            } else {
                g.sub(&unit.scale(gc))
            };
            let coeffs = g2
                .coeffs
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != idx)
                .map(|(_, e)| e.substitute(&bind))
                .collect();
            VectorField {
                chart: chart.clone(),
                coeffs,
            }
        })
        .collect();
    let basis = select_basis(&chart, &candidates, cfg, "transversal_reduction")?;
    if basis.len() + 1 != d.rank() {
        return Err(Error::CertificationFailed(format!(
            "slice {} = {} gives rank {} instead of {}",
            coord,
            value,
            basis.len(),
            d.rank() - 1
        )));
    }
    Ok(Distribution::new_unchecked(chart, basis))
}

/// [`transversal_reduction`] at the [`default_slice`]. Without a base point
/// the value 0 may sit on a branch point or pole of the coefficients; the
/// slice value 1 is tried next.
pub fn reduce_at_default_slice(
    d: &Distribution,
    xi: &VectorField,
    cfg: &SamplerConfig,
) -> Result<(Distribution, String, Rational)> {
    let (coord, value) = default_slice(&d.chart, xi, cfg)?;
    match transversal_reduction(d, xi, &coord, &value, cfg) {
        Ok(r) => Ok((r, coord, value)),
        Err(Error::Domain(_) | Error::SamplingExhausted(_)) if d.chart.base_point.is_none() => {
            let one = Rational::from(1);
            let r = transversal_reduction(d, xi, &coord, &one, cfg)?;
            Ok((r, coord, one))
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone)]
pub struct Deprolongation {
    pub distribution: Distribution,
    /// Cauchy characteristic of the first derived distribution.
    pub characteristic: VectorField,
    pub coord: String,
    pub value: Rational,
}

/// Quotient of the first derived distribution `∂Δ` by its Cauchy
/// characteristic. Requires weak growth starting `(2, 3, 4)`.
pub fn deprolong(
    d: &Distribution,
    slice: Option<(&str, &Rational)>,
    cfg: &SamplerConfig,
) -> Result<Deprolongation> {
    if d.rank() != 2 {
        return Err(Error::WrongShape(format!(
            "rank {} distribution, expected rank 2",
            d.rank()
        )));
    }
    let flag = flag_prefix(d, FlagMode::Weak, 3, cfg)?;
    if flag.growth.len() < 3 || flag.growth[..3] != [2, 3, 4] {
        return Err(Error::NotDeprolongable(format!(
            "weak growth begins {:?}",
            flag.growth
        )));
    }
    let derived = &flag.steps[1];
    let ch = cauchy_characteristics(derived, cfg)?;
    if ch.rank() != 1 {
        return Err(Error::NotDeprolongable(format!(
            "Cauchy characteristic of the derived distribution has rank {}",
            ch.rank()
        )));
    }
    let xi = ch.generators[0].clone();
    let (distribution, coord, value) = match slice {
        Some((c, v)) => (
            transversal_reduction(derived, &xi, c, v, cfg)?,
            c.to_string(),
            v.clone(),
        ),
        None => reduce_at_default_slice(derived, &xi, cfg)?,
    };
    Ok(Deprolongation {
        distribution,
        characteristic: xi,
        coord,
        value,
    })
}

#[derive(Debug, Clone)]
pub struct Restriction {
    pub distribution: Distribution,
    /// The eliminated coordinate and its value on the level set.
    pub coord: String,
    pub solved: Expr,
}

/// Restricts to the level set `f = value` of a first integral, eliminating
/// a coordinate in which `f` is affine.
pub fn restrict_to_level(
    d: &Distribution,
    f: &Expr,
    value: &Rational,
    cfg: &SamplerConfig,
) -> Result<Restriction> {
    if !first_integral_check(d, f, cfg)? {
        return Err(Error::NotFirstIntegral(f.to_string()));
    }
    let mut choice: Option<(usize, Expr)> = None;
    for (i, c) in d.chart.coords.iter().enumerate() {
        let a = f.diff(c);
        if a.is_zero() || a.contains_var(c) {
            continue;
        }
        let constant = a.as_const().is_some();
        if constant || (choice.is_none() && !is_zero(&a, cfg)?) {
            choice = Some((i, a));
            if constant {
                break;
            }
        }
    }
    let (idx, a) = choice.ok_or_else(|| {
        Error::CertificationFailed(format!("`{}` is not affine in any coordinate", f))
    })?;
    let coord = d.chart.coords[idx].to_string();
    let b = f.subs(&coord, &Expr::zero());
    let solved = (Expr::constant(value.clone()) - b) / a;
    let mut bind = HashMap::new();
    bind.insert(coord.as_str(), solved.clone());
    let chart = Arc::new(d.chart.without(&coord));
    let gens = d
        .generators
        .iter()
        .map(|g| VectorField {
            chart: chart.clone(),
            coeffs: g
                .coeffs
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != idx)
                .map(|(_, e)| e.substitute(&bind))
                .collect(),
        })
        .collect();
    match Distribution::new(chart, gens, cfg) {
        Ok(distribution) => Ok(Restriction {
            distribution,
            coord,
            solved,
        }),
        Err(Error::DependentGenerators { rank, count }) => Err(Error::CertificationFailed(
            format!("restriction drops the rank from {} to {}", count, rank),
        )),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::field;
    use super::super::{derived_flag, Chart, FlagMode};
    use super::*;

    fn dist(coords: &[&str], gens: &[&[&str]]) -> Distribution {
        let ch = Arc::new(Chart::new("t", coords).unwrap());
        let g = gens.iter().map(|c| field(&ch, c)).collect();
        Distribution::new(ch, g, &SamplerConfig::default()).unwrap()
    }

    fn engel() -> Distribution {
        dist(
            &["x", "y", "y1", "y2"],
            &[&["1", "y1", "y2", "0"], &["0", "0", "0", "1"]],
        )
    }

    #[test]
    fn contact_has_no_characteristics() {
        let d = dist(&["x", "y", "y1"], &[&["1", "y1", "0"], &["0", "0", "1"]]);
        assert_eq!(
            cauchy_characteristics(&d, &SamplerConfig::default())
                .unwrap()
                .rank(),
            0
        );
    }

    #[test]
    fn engel_derived_characteristic() {
        let cfg = SamplerConfig::default();
        let d = dist(
            &["x", "y", "y1", "y2"],
            &[
                &["1", "y1", "y2", "0"],
                &["0", "0", "0", "1"],
                &["0", "0", "1", "0"],
            ],
        );
        let ch = cauchy_characteristics(&d, &cfg).unwrap();
        assert_eq!(ch.rank(), 1);
        let dy2 = VectorField::coordinate(&d.chart, "y2").unwrap();
        let both = Distribution::new_unchecked(d.chart.clone(), vec![ch.generators[0].clone()]);
        assert!(both.contains(&dy2, &cfg).unwrap());
    }

    #[test]
    fn involutive_is_its_own_characteristic() {
        let d = dist(&["x", "y", "z"], &[&["1", "0", "0"], &["0", "1", "0"]]);
        assert_eq!(
            cauchy_characteristics(&d, &SamplerConfig::default())
                .unwrap()
                .rank(),
            2
        );
    }

    #[test]
    fn simple_slice() {
        let cfg = SamplerConfig::default();
        let d = dist(&["x", "y"], &[&["1", "0"], &["0", "1"]]);
        let xi = VectorField::coordinate(&d.chart, "y").unwrap();
        let r = transversal_reduction(&d, &xi, "y", &Rational::new(), &cfg).unwrap();
        assert_eq!(r.dim(), 1);
        assert_eq!(r.rank(), 1);
        let bad = transversal_reduction(&d, &xi, "x", &Rational::new(), &cfg);
        assert!(matches!(bad, Err(Error::ZeroTransversalCoefficient(_))));
    }

    #[test]
    fn field_outside_rejected() {
        let cfg = SamplerConfig::default();
        let d = dist(&["x", "y", "z"], &[&["1", "0", "0"], &["0", "1", "x"]]);
        let dz = VectorField::coordinate(&d.chart, "z").unwrap();
        let r = transversal_reduction(&d, &dz, "z", &Rational::new(), &cfg);
        assert!(matches!(r, Err(Error::NotInDistribution)));
    }

    #[test]
    fn j3_deprolongs_to_engel() {
        let cfg = SamplerConfig::default();
        let d = dist(
            &["x", "y", "y1", "y2", "y3"],
            &[&["1", "y1", "y2", "y3", "0"], &["0", "0", "0", "0", "1"]],
        );
        let dp = deprolong(&d, None, &cfg).unwrap();
        assert_eq!(dp.distribution.dim(), 4);
        let g = derived_flag(&dp.distribution, FlagMode::Weak, 16, &cfg).unwrap();
        assert_eq!(g.growth, vec![2, 3, 4]);
        let e = deprolong(&engel(), None, &cfg).unwrap();
        let g = derived_flag(&e.distribution, FlagMode::Weak, 16, &cfg).unwrap();
        assert_eq!(g.growth, vec![2, 3]);
    }

    #[test]
    fn hilbert_cartan_not_deprolongable() {
        let d = dist(
            &["x", "z", "z1", "z2", "w"],
            &[&["1", "z1", "z2", "0", "z2^2"], &["0", "0", "0", "1", "0"]],
        );
        let r = deprolong(&d, None, &SamplerConfig::default());
        assert!(matches!(r, Err(Error::NotDeprolongable(_))));
    }

    #[test]
    fn level_restriction() {
        let cfg = SamplerConfig::default();
        // ⟨∂x + y1∂y, ∂y1⟩ on (x, y, y1, c): c is a first integral
        let d = dist(
            &["x", "y", "y1", "c"],
            &[&["1", "y1", "0", "0"], &["0", "0", "1", "0"]],
        );
        let r = restrict_to_level(&d, &Expr::var("c"), &Rational::from(2), &cfg).unwrap();
        assert_eq!(r.coord, "c");
        assert_eq!(r.solved, Expr::int(2));
        assert_eq!(r.distribution.dim(), 3);
        let bad = restrict_to_level(&d, &Expr::var("x"), &Rational::new(), &cfg);
        assert!(matches!(bad, Err(Error::NotFirstIntegral(_))));
    }
}
