use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geom::{Chart, VectorField};

fn indices(n: usize, level: usize) -> Vec<Vec<usize>> {
    match n {
        1 => vec![vec![level]],
        2 => (0..=level).rev().map(|i| vec![i, level - i]).collect(),
        _ => unreachable!(),
    }
}

fn name(dep: &str, n: usize, s: &[usize]) -> String {
    if s.iter().all(|&k| k == 0) {
        dep.to_string()
    } else if n == 1 {
        format!("{}{}", dep, s[0])
    } else {
        format!("{}{}{}", dep, s[0], s[1])
    }
}

/// Coordinates of `J^{k_1,…}` with the given independents and dependents
/// (with their orders): independents first, then each dependent by level.
/// One dependent `y` over `x` gives `y, y1, y2`; over `(x, y)` a dependent
/// `u` gives `u, u10, u01, …`.
pub fn jet_coordinates(independents: &[&str], dependents: &[(&str, usize)]) -> Result<Vec<String>> {
    let n = independents.len();
    if !(1..=2).contains(&n) {
        return Err(Error::WrongShape(
            "one or two independent variables are supported".into(),
        ));
    }
    let mut out: Vec<String> = independents.iter().map(|s| s.to_string()).collect();
    for (dep, k) in dependents {
        for level in 0..=*k {
            out.extend(indices(n, level).iter().map(|s| name(dep, n, s)));
        }
    }
    Ok(out)
}

/// Prolongs a point field on `(independents, dependents)` to the jet space:
/// `φ_{σ+a} = D_a φ_σ - Σ_b u_{σ+b} D_a ξ^b`.
///
/// Jet coordinates beyond the requested orders that appear in the result are
/// left as symbols.
pub fn prolong_vector_field(
    field: &VectorField,
    independents: &[&str],
    dependents: &[(&str, usize)],
) -> Result<VectorField> {
    let n = independents.len();
    let coords = jet_coordinates(independents, dependents)?;
    let base: Vec<&str> = independents
        .iter()
        .copied()
        .chain(dependents.iter().map(|d| d.0))
        .collect();
    if field.chart.dim() != base.len() || base.iter().any(|c| field.chart.index_of(c).is_none()) {
        return Err(Error::ChartMismatch(
            "field is not on the base coordinates".into(),
        ));
    }
    // jet coordinate name → (dependent, multi-index), one level past each order
    let mut table: HashMap<String, (usize, Vec<usize>)> = HashMap::new();
    for (d, (dep, k)) in dependents.iter().enumerate() {
        for level in 0..=k + 1 {
            for s in indices(n, level) {
                table.insert(name(dep, n, &s), (d, s));
            }
        }
    }
    let shifted = |d: usize, s: &[usize], a: usize| -> String {
        let mut t = s.to_vec();
        t[a] += 1;
        name(dependents[d].0, n, &t)
    };
    let total = |f: &Expr, a: usize| -> Expr {
        let mut terms = Vec::new();
        for v in f.free_vars() {
            let df = f.diff(&v);
            if df.is_zero() {
                continue;
            }
            if &*v == independents[a] {
                terms.push(df);
            } else if let Some((d, s)) = table.get(&*v) {
                terms.push(df * Expr::var(&shifted(*d, s, a)));
            }
        }
        Expr::add_all(terms)
    };
    let xi: Vec<Expr> = independents
        .iter()
        .map(|c| field.coeff(c).unwrap().clone())
        .collect();
    let dxi: Vec<Vec<Expr>> = (0..n)
        .map(|a| xi.iter().map(|e| total(e, a)).collect())
        .collect();
    let mut coeff: HashMap<String, Expr> = HashMap::new();
    for (i, c) in independents.iter().enumerate() {
        coeff.insert(c.to_string(), xi[i].clone());
    }
    for (d, (dep, k)) in dependents.iter().enumerate() {
        coeff.insert(dep.to_string(), field.coeff(dep).unwrap().clone());
        for level in 1..=*k {
            for s in indices(n, level) {
                let a = s.iter().position(|&v| v > 0).unwrap();
                let mut parent = s.clone();
                parent[a] -= 1;
                let phi = &coeff[&name(dep, n, &parent)];
                let mut terms = vec![total(phi, a)];
                for (b, dx) in dxi[a].iter().enumerate() {
                    if !dx.is_zero() {
                        terms.push(-(Expr::var(&shifted(d, &parent, b)) * dx));
                    }
                }
                coeff.insert(name(dep, n, &s), Expr::add_all(terms));
            }
        }
    }
    let chart = Arc::new(Chart::new(&field.chart.name, &coords)?);
    let coeffs = coords.iter().map(|c| coeff[c].clone()).collect();
    VectorField::new(chart, coeffs)
}
