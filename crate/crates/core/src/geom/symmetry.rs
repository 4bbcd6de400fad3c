use rug::Rational;
use serde::Serialize;

use super::{lie_bracket, Distribution, Evaluated, Probe, VectorField};
use crate::error::{Error, Result};
use crate::expr::{is_zero, Expr, SamplerConfig};
use crate::linalg::solve_constant_combination;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryMode {
    /// `[V, Δ] ⊆ Δ`.
    Strict,
    /// `[V, V] ⊆ V` and `[V, Δ] ⊆ V + Δ`.
    Generalized,
}

fn check_charts(d: &Distribution, fields: &[VectorField]) -> Result<()> {
    if fields.iter().any(|f| !f.chart.same_coords(&d.chart)) {
        return Err(Error::ChartMismatch(
            "fields and distribution use different charts".into(),
        ));
    }
    Ok(())
}

/// Rank test: does each of `tests` lie in the span of `base`?
fn all_in_span(
    d: &Distribution,
    base: &[VectorField],
    tests: &[VectorField],
    cfg: &SamplerConfig,
) -> Result<bool> {
    let tests: Vec<&VectorField> = tests.iter().filter(|t| !t.is_zero()).collect();
    if tests.is_empty() {
        return Ok(true);
    }
    let mut all: Vec<&VectorField> = base.iter().collect();
    all.extend(tests.iter().copied());
    let probe = Probe::new(&d.chart, &all, cfg, "span")?;
    let base_e: Vec<Evaluated> = base.iter().map(|f| probe.eval(f)).collect();
    let base_rows: Vec<&Evaluated> = base_e.iter().collect();
    let r = probe.rank(&base_rows)?;
    for t in tests {
        let te = probe.eval(t);
        let mut rows = base_rows.clone();
        rows.push(&te);
        if probe.rank(&rows)? > r {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn symmetry_check(
    d: &Distribution,
    v: &[VectorField],
    mode: SymmetryMode,
    cfg: &SamplerConfig,
) -> Result<bool> {
    check_charts(d, v)?;
    let mut cross = Vec::new();
    for a in v {
        for g in &d.generators {
            cross.push(lie_bracket(a, g)?);
        }
    }
    match mode {
        SymmetryMode::Strict => all_in_span(d, &d.generators, &cross, cfg),
        SymmetryMode::Generalized => {
            let mut inner = Vec::new();
            for (i, a) in v.iter().enumerate() {
                for b in &v[i + 1..] {
                    inner.push(lie_bracket(a, b)?);
                }
            }
            if !all_in_span(d, v, &inner, cfg)? {
                return Ok(false);
            }
            let mut both = v.to_vec();
            both.extend(d.generators.iter().cloned());
            all_in_span(d, &both, &cross, cfg)
        }
    }
}

/// `X(f) = 0` for every generator; this suffices for the whole closure.
pub fn first_integral_check(d: &Distribution, f: &Expr, cfg: &SamplerConfig) -> Result<bool> {
    for g in &d.generators {
        if !is_zero(&g.apply(f), cfg)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Serialize)]
pub struct SolvableReport {
    pub is_symmetry_algebra: bool,
    pub closes_with_constants: bool,
    /// Nonzero structure constants `[f_i, f_j] = Σ c_k f_k`, `i < j`.
    pub structure_constants: Vec<(usize, usize, Vec<String>)>,
    pub solvable: Option<bool>,
    pub derived_length: Option<usize>,
    /// Dimensions of the derived series, starting with the algebra itself.
    pub derived_series: Vec<usize>,
    pub transversal: bool,
    pub expected_count: usize,
    pub count_matches: bool,
}

/// Dimension-reducing derived series of a Lie algebra given by structure
/// constants `c[i][j][k]`. Returns the dimensions, ending at 0 or at a fixed point.
fn derived_series(c: &[Vec<Vec<Rational>>]) -> Vec<usize> {
    let n = c.len();
    let bracket = |x: &[Rational], y: &[Rational]| -> Vec<Rational> {
        let mut out = vec![Rational::new(); n];
        for i in 0..n {
            if x[i] == 0 {
                continue;
            }
            for j in 0..n {
                if y[j] == 0 {
                    continue;
                }
                let xy = Rational::from(&x[i] * &y[j]);
                for k in 0..n {
                    if c[i][j][k] != 0 {
                        out[k] += Rational::from(&xy * &c[i][j][k]);
                    }
                }
            }
        }
        out
    };
    let mut basis: Vec<Vec<Rational>> = (0..n)
        .map(|i| (0..n).map(|j| Rational::from(u8::from(i == j))).collect())
        .collect();
    let mut dims = vec![n];
    loop {
        let mut next: Vec<Vec<Rational>> = Vec::new();
        for i in 0..basis.len() {
            for j in i + 1..basis.len() {
                let b = bracket(&basis[i], &basis[j]);
                let mut trial = next.clone();
                trial.push(b.clone());
                if rational_rank(&trial) > next.len() {
                    next.push(b);
                }
            }
        }
        let d = next.len();
        if d == *dims.last().unwrap() {
            break;
        }
        dims.push(d);
        if d == 0 {
            break;
        }
        basis = next;
    }
    dims
}

fn rational_rank(rows: &[Vec<Rational>]) -> usize {
    let vals: Vec<Vec<crate::expr::Value>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|q| crate::expr::Value::Exact(q.clone()))
                .collect()
        })
        .collect();
    crate::linalg::numeric_rank(&vals).unwrap_or(0)
}

/// Checks the hypotheses for integration by quadratures with a solvable
/// algebra of transversal symmetries.
pub fn solvable_transversal_check(
    d: &Distribution,
    fields: &[VectorField],
    cfg: &SamplerConfig,
) -> Result<SolvableReport> {
    check_charts(d, fields)?;
    let k = fields.len();
    let expected_count = d.dim() - d.rank();
    let mut is_symmetry_algebra = true;
    for f in fields {
        if !symmetry_check(d, std::slice::from_ref(f), SymmetryMode::Strict, cfg)? {
            is_symmetry_algebra = false;
        }
    }
    let vecs: Vec<Vec<Expr>> = fields.iter().map(|f| f.coeffs.clone()).collect();
    let mut c = vec![vec![vec![Rational::new(); k]; k]; k];
    let mut closes = true;
    let mut listed = Vec::new();
    'outer: for i in 0..k {
        for j in i + 1..k {
            let b = lie_bracket(&fields[i], &fields[j])?;
            match solve_constant_combination(&vecs, &b.coeffs, cfg)? {
                Some(coeffs) => {
                    if coeffs.iter().any(|q| *q != 0) {
                        listed.push((i, j, coeffs.iter().map(|q| q.to_string()).collect()));
                    }
                    for (m, q) in coeffs.into_iter().enumerate() {
                        c[j][i][m] = Rational::from(-&q);
                        c[i][j][m] = q;
                    }
                }
                None => {
                    closes = false;
                    break 'outer;
                }
            }
        }
    }
    let (solvable, derived_length, series) = if closes {
        let s = derived_series(&c);
        let solvable = *s.last().unwrap() == 0;
        (Some(solvable), solvable.then(|| s.len() - 1), s)
    } else {
        (None, None, Vec::new())
    };
    let transversal = k > 0 && d.rank_with(fields, cfg)? == k + d.rank();
    Ok(SolvableReport {
        is_symmetry_algebra,
        closes_with_constants: closes,
        structure_constants: if closes { listed } else { Vec::new() },
        solvable,
        derived_length,
        derived_series: series,
        transversal,
        expected_count,
        count_matches: k == expected_count,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::super::tests::field;
    use super::super::Chart;
    use super::*;

    fn hc() -> Distribution {
        let ch = Arc::new(Chart::new("HC", &["x", "z", "z1", "z2", "w"]).unwrap());
        let g = vec![
            field(&ch, &["1", "z1", "z2", "0", "z2^2"]),
            field(&ch, &["0", "0", "0", "1", "0"]),
        ];
        Distribution::new(ch, g, &SamplerConfig::default()).unwrap()
    }

    #[test]
    fn strict_and_generalized() {
        let cfg = SamplerConfig::default();
        let d = hc();
        let dx = VectorField::coordinate(&d.chart, "x").unwrap();
        assert!(symmetry_check(&d, &[dx], SymmetryMode::Strict, &cfg).unwrap());
        let dz2 = VectorField::coordinate(&d.chart, "z2").unwrap();
        assert!(
            !symmetry_check(&d, std::slice::from_ref(&dz2), SymmetryMode::Strict, &cfg).unwrap()
        );
        assert!(!symmetry_check(&d, &[dz2], SymmetryMode::Generalized, &cfg).unwrap());
        // y∂y on the contact plane field: [y∂y, ∂x + p∂y] = -p∂y
        let ch = Arc::new(Chart::new("c", &["x", "y", "p"]).unwrap());
        let c = Distribution::new(
            ch.clone(),
            vec![field(&ch, &["1", "p", "0"]), field(&ch, &["0", "0", "1"])],
            &cfg,
        )
        .unwrap();
        let v = field(&ch, &["0", "y", "0"]);
        assert!(!symmetry_check(&c, std::slice::from_ref(&v), SymmetryMode::Strict, &cfg).unwrap());
        assert!(symmetry_check(&c, &[v], SymmetryMode::Generalized, &cfg).unwrap());
        let dz1 = VectorField::coordinate(&d.chart, "z1").unwrap();
        assert!(!symmetry_check(&d, &[dz1], SymmetryMode::Strict, &cfg).unwrap());
    }

    #[test]
    fn integrals() {
        let cfg = SamplerConfig::default();
        let ch = Arc::new(Chart::new("c", &["x", "y", "y1"]).unwrap());
        let d = Distribution::new(
            ch.clone(),
            vec![field(&ch, &["1", "y1", "0"]), field(&ch, &["0", "0", "1"])],
            &cfg,
        )
        .unwrap();
        assert!(first_integral_check(&d, &Expr::int(4), &cfg).unwrap());
        assert!(!first_integral_check(&d, &Expr::var("x"), &cfg).unwrap());
    }

    #[test]
    fn abelian_undercount() {
        let cfg = SamplerConfig::default();
        let d = hc();
        let dw = VectorField::coordinate(&d.chart, "w").unwrap();
        let r = solvable_transversal_check(&d, &[dw], &cfg).unwrap();
        assert_eq!(r.solvable, Some(true));
        assert_eq!(r.derived_length, Some(1));
        assert!(r.transversal);
        assert!(!r.count_matches);
        assert_eq!(r.expected_count, 3);
    }

    #[test]
    fn field_inside_not_transversal() {
        let cfg = SamplerConfig::default();
        let ch = Arc::new(Chart::new("h", &["x", "y", "z"]).unwrap());
        let d = Distribution::new(
            ch.clone(),
            vec![field(&ch, &["1", "0", "0"]), field(&ch, &["0", "1", "x"])],
            &cfg,
        )
        .unwrap();
        let r = solvable_transversal_check(&d, &[field(&ch, &["1", "0", "0"])], &cfg).unwrap();
        assert!(!r.transversal);
    }

    #[test]
    fn derived_series_of_affine_plane() {
        // [e0, e1] = -e2, [e0, e2] = e1: derived series 3 -> 2 -> 0
        let q = |v: i64| Rational::from(v);
        let mut c = vec![vec![vec![Rational::new(); 3]; 3]; 3];
        c[0][1][2] = q(-1);
        c[1][0][2] = q(1);
        c[0][2][1] = q(1);
        c[2][0][1] = q(-1);
        assert_eq!(derived_series(&c), vec![3, 2, 0]);
    }
}
