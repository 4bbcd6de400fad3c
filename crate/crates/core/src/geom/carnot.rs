use rug::Rational;

use super::flag::{derived_flag, FlagMode};
use super::{lie_bracket, Distribution, Evaluated, Probe, VectorField};
use crate::error::{Error, Result};
use crate::expr::{Point, SamplerConfig, Value};
use crate::linalg::{echelon_limited, rationalize};

/// Graded nilpotent algebra of the weak flag at a point.
#[derive(Debug, Clone)]
pub struct CarnotAlgebra {
    pub dims: Vec<usize>,
    pub labels: Vec<String>,
    /// Degree (1-based) of each basis element.
    pub degrees: Vec<usize>,
    pub point: Point,
    /// Nonzero brackets `[e_i, e_j] = Σ c_k e_k` for `i < j`.
    pub brackets: Vec<(usize, usize, Vec<Rational>)>,
}

impl CarnotAlgebra {
    pub fn bracket(&self, i: usize, j: usize) -> Vec<Rational> {
        let n = self.labels.len();
        for (a, b, c) in &self.brackets {
            if (*a, *b) == (i, j) {
                return c.clone();
            }
            if (*a, *b) == (j, i) {
                return c.iter().map(|q| Rational::from(-q)).collect();
            }
        }
        vec![Rational::new(); n]
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Renders a vector of the basis as `e3 - 2*e3'`.
    pub fn format_vector(&self, v: &[Rational]) -> String {
        let mut s = String::new();
        for (q, l) in v.iter().zip(&self.labels) {
            if *q == 0 {
                continue;
            }
            let neg = *q < 0;
            let mag = Rational::from(q.abs_ref());
            let term = if mag == 1 {
                l.clone()
            } else {
                format!("{}*{}", mag, l)
            };
            if s.is_empty() {
                s = if neg { format!("-{}", term) } else { term };
            } else {
                s.push_str(if neg { " - " } else { " + " });
                s.push_str(&term);
            }
        }
        if s.is_empty() {
            s.push('0');
        }
        s
    }

    fn check_jacobi(&self) -> bool {
        let n = self.labels.len();
        let full: Vec<Vec<Vec<Rational>>> = (0..n)
            .map(|i| (0..n).map(|j| self.bracket(i, j)).collect())
            .collect();
        let br = |x: &[Rational], k: usize| -> Vec<Rational> {
            // [x, e_k]
            let mut out = vec![Rational::new(); n];
            for (i, xi) in x.iter().enumerate() {
                if *xi == 0 {
                    continue;
                }
                for (o, c) in out.iter_mut().zip(&full[i][k]) {
                    *o += Rational::from(xi * c);
                }
            }
            out
        };
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let t1 = br(&full[a][b], c);
                    let t2 = br(&full[b][c], a);
                    let t3 = br(&full[c][a], b);
                    if (0..n).any(|k| Rational::from(&t1[k] + &t2[k]) + &t3[k] != 0) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

fn label(degree: usize, idx: usize) -> String {
    format!("e{}{}", degree, "'".repeat(idx))
}

pub fn carnot_algebra(
    d: &Distribution,
    point: Option<&Point>,
    max_steps: usize,
    cfg: &SamplerConfig,
) -> Result<CarnotAlgebra> {
    let flag = derived_flag(d, FlagMode::Weak, max_steps, cfg)?;
    let closure = *flag.growth.last().unwrap();
    if closure < d.dim() {
        return Err(Error::NotFullyNonholonomic {
            closure,
            dim: d.dim(),
        });
    }
    let dims = flag.reduced_growth.clone();
    let gens: Vec<&VectorField> = d.generators.iter().collect();
    let probe = Probe::new(&d.chart, &gens, cfg, "carnot")?;

    // adapted frame, degree by degree
    let mut frame: Vec<VectorField> = d.generators.clone();
    let mut evals: Vec<Evaluated> = frame.iter().map(|f| probe.eval(f)).collect();
    let mut degrees = vec![1; frame.len()];
    let mut rank = probe.rank(&evals.iter().collect::<Vec<_>>())?;
    for (k, &want) in dims.iter().enumerate().skip(1) {
        let deg = k + 1;
        let ones: Vec<usize> = (0..degrees.len()).filter(|&i| degrees[i] == 1).collect();
        let prev: Vec<usize> = (0..degrees.len())
            .filter(|&i| degrees[i] == deg - 1)
            .collect();
        let mut got = 0;
        'search: for &a in &ones {
            for &b in &prev {
                if deg == 2 && b <= a {
                    continue;
                }
                let f = lie_bracket(&frame[a], &frame[b])?;
                if f.is_zero() {
                    continue;
                }
                let fe = probe.eval(&f);
                let mut rows: Vec<&Evaluated> = evals.iter().collect();
                rows.push(&fe);
                let nr = probe.rank(&rows)?;
                if nr > rank {
                    rank = nr;
                    frame.push(f);
                    evals.push(fe);
                    degrees.push(deg);
                    got += 1;
                    if got == want {
                        break 'search;
                    }
                }
            }
        }
        if got != want {
            return Err(Error::CertificationFailed(format!(
                "degree {} frame has {} fields, expected {}",
                deg, got, want
            )));
        }
    }

    let regular = |p: &Point| -> Result<Option<Vec<Vec<Value>>>> {
        let pr = Probe::at(vec![p.clone()]);
        let vals: Option<Vec<Vec<Value>>> =
            frame.iter().map(|f| pr.eval(f).pop().flatten()).collect();
        let Some(vals) = vals else { return Ok(None) };
        for (k, &g) in flag.growth.iter().enumerate() {
            let sub: Vec<Vec<Value>> = vals
                .iter()
                .zip(&degrees)
                .filter(|(_, &dg)| dg <= k + 1)
                .map(|(v, _)| v.clone())
                .collect();
            if crate::linalg::numeric_rank(&sub)? != g {
                return Ok(None);
            }
        }
        Ok(Some(vals))
    };
    let (point, values) = match point {
        Some(p) => match regular(p)? {
            Some(v) => (p.clone(), v),
            None => {
                return Err(Error::NotRegularPoint(
                    "frame degenerates at the requested point".into(),
                ))
            }
        },
        None => {
            let mut chosen = None;
            let candidates = d.chart.base_point.iter().chain(probe.points());
            for p in candidates {
                if let Some(v) = regular(p)? {
                    chosen = Some((p.clone(), v));
                    break;
                }
            }
            chosen.ok_or_else(|| Error::NotRegularPoint("no sampled point is regular".into()))?
        }
    };

    let n = frame.len();
    let at = Probe::at(vec![point.clone()]);
    let mut brackets = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let deg = degrees[i] + degrees[j];
            if deg > dims.len() {
                continue;
            }
            let w = lie_bracket(&frame[i], &frame[j])?;
            let wv = at.eval(&w).pop().flatten().ok_or_else(|| {
                Error::NotRegularPoint("bracket does not evaluate at the point".into())
            })?;
            let rows: Vec<Vec<Value>> = (0..d.dim())
                .map(|c| {
                    let mut row: Vec<Value> = values.iter().map(|f| f[c].clone()).collect();
                    row.push(wv[c].clone());
                    row
                })
                .collect();
            let ech = echelon_limited(&rows, n)?;
            let mut coeffs = vec![Rational::new(); n];
            for (r, &c) in ech.pivot_cols.iter().enumerate() {
                if degrees[c] != deg {
                    continue;
                }
                coeffs[c] = match &ech.reduced[r][n] {
                    Value::Exact(q) => q.clone(),
                    Value::Approx(f) => rationalize(f).ok_or_else(|| {
                        Error::CertificationFailed(
                            "structure constant is not a small rational".into(),
                        )
                    })?,
                };
            }
            if coeffs.iter().any(|q| *q != 0) {
                brackets.push((i, j, coeffs));
            }
        }
    }
    let mut counts = vec![0usize; dims.len() + 1];
    let labels = degrees
        .iter()
        .map(|&dg| {
            counts[dg] += 1;
            label(dg, counts[dg] - 1)
        })
        .collect();
    let alg = CarnotAlgebra {
        dims,
        labels,
        degrees,
        point,
        brackets,
    };
    if !alg.check_jacobi() {
        return Err(Error::CertificationFailed(
            "structure constants violate the Jacobi identity".into(),
        ));
    }
    Ok(alg)
}
