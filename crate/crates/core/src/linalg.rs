//! Linear algebra over the expression field.
//!
//! Ranks are computed numerically at random points; symbolic results
//! (kernels, combinations) are built from determinants and then certified
//! with [`is_zero`].

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::expr::{
    evaluate, fingerprint, is_zero, Expr, Point, Sampler, SamplerConfig, Value, PRECISION,
};

/// Below this (relative to the largest entry) a float pivot counts as zero.
const FLOAT_ZERO: f64 = 1e-60;
/// Between `FLOAT_ZERO` and this a float pivot cannot be classified.
const FLOAT_AMBIGUOUS: f64 = 1e-45;

#[derive(Debug, Clone, PartialEq)]
pub struct ExprMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Expr>,
}

impl ExprMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Expr>) -> ExprMatrix {
        assert_eq!(
            entries.len(),
            rows * cols,
            "entries length must be rows * cols"
        );
        ExprMatrix {
            rows,
            cols,
            entries,
        }
    }

    /// Builds from row vectors; `cols` is needed when there are no rows.
    pub fn from_rows(rows: Vec<Vec<Expr>>, cols: usize) -> ExprMatrix {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged matrix");
            entries.extend(r);
        }
        ExprMatrix {
            rows: n,
            cols,
            entries,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[Expr] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<Expr>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn vars(&self) -> BTreeSet<Arc<str>> {
        let mut v = BTreeSet::new();
        for e in &self.entries {
            e.collect_vars(&mut v);
        }
        v
    }

    fn salt(&self) -> u64 {
        self.entries
            .iter()
            .fold(self.rows as u64 * 31 + self.cols as u64, |h, e| {
                h.rotate_left(5) ^ fingerprint(e)
            })
    }

    /// Evaluates every entry at `p`.
    pub fn eval(&self, p: &Point) -> Result<Vec<Vec<Value>>> {
        eval_rows(&self.row_vecs(), p)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Expr]) -> Vec<Expr> {
        (0..self.rows)
            .map(|i| Expr::add_all(self.row(i).iter().zip(v).map(|(a, b)| a * b)))
            .collect()
    }
}

pub fn eval_rows(rows: &[Vec<Expr>], p: &Point) -> Result<Vec<Vec<Value>>> {
    rows.iter()
        .map(|r| r.iter().map(|e| evaluate(e, p)).collect())
        .collect()
}

/// Result of row reduction at one point.
#[derive(Debug, Clone)]
pub struct Echelon {
    pub rank: usize,
    /// Pivot column for each pivot, left to right.
    pub pivot_cols: Vec<usize>,
    /// Original row index that supplied each pivot.
    pub pivot_rows: Vec<usize>,
    /// Reduced rows (row-reduced echelon form, permuted).
    pub reduced: Vec<Vec<Value>>,
}

enum Class {
    Zero,
    Ambiguous,
    NonZero,
}

trait Scalar: Clone {
    fn magnitude(&self) -> f64;
    fn class(&self, scale: f64) -> Class;
    fn sub_mul(&mut self, a: &Self, b: &Self);
    fn div(&self, d: &Self) -> Self;
    fn exact() -> bool;
    fn into_value(self) -> Value;
}

impl Scalar for Rational {
    fn magnitude(&self) -> f64 {
        self.to_f64().abs()
    }
    fn class(&self, _: f64) -> Class {
        if *self == 0 {
            Class::Zero
        } else {
            Class::NonZero
        }
    }
    fn sub_mul(&mut self, a: &Self, b: &Self) {
        *self -= Rational::from(a * b);
    }
    fn div(&self, d: &Self) -> Self {
        Rational::from(self / d)
    }
    fn exact() -> bool {
        true
    }
    fn into_value(self) -> Value {
        Value::Exact(self)
    }
}

impl Scalar for Float {
    fn magnitude(&self) -> f64 {
        self.to_f64().abs()
    }
    fn class(&self, scale: f64) -> Class {
        let m = self.magnitude();
        if m <= FLOAT_ZERO * scale {
            Class::Zero
        } else if m <= FLOAT_AMBIGUOUS * scale {
            Class::Ambiguous
        } else {
            Class::NonZero
        }
    }
    fn sub_mul(&mut self, a: &Self, b: &Self) {
        *self -= Float::with_val(PRECISION, a * b);
    }
    fn div(&self, d: &Self) -> Self {
        Float::with_val(PRECISION, self / d)
    }
    fn exact() -> bool {
        false
    }
    fn into_value(self) -> Value {
        Value::Approx(self)
    }
}

fn rref<T: Scalar>(mut m: Vec<Vec<T>>, max_pivot_col: usize) -> Result<Echelon> {
    let nrows = m.len();
    let ncols = m.first().map_or(0, |r| r.len());
    let scale = m
        .iter()
        .flatten()
        .map(Scalar::magnitude)
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut perm: Vec<usize> = (0..nrows).collect();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..max_pivot_col.min(ncols) {
        if r == nrows {
            break;
        }
        let mut best: Option<usize> = None;
        if T::exact() {
            best = (r..nrows).find(|&i| matches!(m[i][c].class(scale), Class::NonZero));
        } else {
            let mut best_mag = -1.0;
            for (i, row) in m.iter().enumerate().skip(r) {
                let mag = row[c].magnitude();
                if mag > best_mag {
                    best_mag = mag;
                    best = Some(i);
                }
            }
            if let Some(i) = best {
                match m[i][c].class(scale) {
                    Class::Zero => best = None,
                    Class::Ambiguous => {
                        return Err(Error::PivotAmbiguity(format!(
                            "pivot of magnitude {:e} in column {} cannot be classified",
                            m[i][c].magnitude(),
                            c
                        )))
                    }
                    Class::NonZero => {}
                }
            }
        }
        let Some(b) = best else { continue };
        m.swap(r, b);
        perm.swap(r, b);
        let piv = m[r][c].clone();
        for x in m[r].iter_mut() {
            *x = x.div(&piv);
        }
        let prow = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c].clone();
            if matches!(f.class(scale), Class::Zero) && T::exact() {
                continue;
            }
            for j in 0..ncols {
                row[j].sub_mul(&f, &prow[j]);
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    Ok(Echelon {
        rank: r,
        pivot_rows: perm[..r].to_vec(),
        pivot_cols,
        reduced: m
            .into_iter()
            .map(|row| row.into_iter().map(Scalar::into_value).collect())
            .collect(),
    })
}

/// Row reduction of numeric rows; exact when every entry is exact.
pub fn echelon(rows: &[Vec<Value>]) -> Result<Echelon> {
    let ncols = rows.first().map_or(0, |r| r.len());
    echelon_limited(rows, ncols)
}

/// Row reduction that only pivots in the first `max_pivot_col` columns.
pub fn echelon_limited(rows: &[Vec<Value>], max_pivot_col: usize) -> Result<Echelon> {
    if rows.iter().flatten().all(Value::is_exact) {
        let m: Vec<Vec<Rational>> = rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|v| match v {
                        Value::Exact(q) => q.clone(),
                        Value::Approx(_) => unreachable!(),
                    })
                    .collect()
            })
            .collect();
        rref(m, max_pivot_col)
    } else {
        let m: Vec<Vec<Float>> = rows
            .iter()
            .map(|r| r.iter().map(Value::to_float).collect())
            .collect();
        rref(m, max_pivot_col)
    }
}

pub fn numeric_rank(rows: &[Vec<Value>]) -> Result<usize> {
    Ok(echelon(rows)?.rank)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankReport {
    pub rank: usize,
    /// Rank at each sampled point, in sampling order.
    pub spectrum: Vec<usize>,
}

impl RankReport {
    pub fn is_regular(&self) -> bool {
        self.spectrum.iter().all(|&r| r == self.rank)
    }
}

/// Samples `trials` points at which every entry evaluates.
pub(crate) fn sample_points(
    vars: &BTreeSet<Arc<str>>,
    rows: &[Vec<Expr>],
    cfg: &SamplerConfig,
    salt: u64,
    count: usize,
) -> Result<Vec<(Point, Vec<Vec<Value>>)>> {
    let mut sampler = Sampler::new(cfg, salt);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut found = None;
        for _ in 0..cfg.max_retries.max(1) {
            let p = sampler.point(vars, None);
            match eval_rows(rows, &p) {
                Ok(v) => {
                    found = Some((p, v));
                    break;
                }
                Err(Error::Domain(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        match found {
            Some(f) => out.push(f),
            None => {
                return Err(Error::SamplingExhausted(format!(
                    "no admissible point after {} attempts",
                    cfg.max_retries
                )))
            }
        }
    }
    Ok(out)
}

pub fn rank_report(m: &ExprMatrix, cfg: &SamplerConfig) -> Result<RankReport> {
    if m.entries.iter().all(Expr::is_zero) {
        return Ok(RankReport {
            rank: 0,
            spectrum: vec![0; cfg.trials.max(1)],
        });
    }
    let pts = sample_points(&m.vars(), &m.row_vecs(), cfg, m.salt(), cfg.trials.max(1))?;
    let mut spectrum = Vec::with_capacity(pts.len());
    for (_, vals) in &pts {
        spectrum.push(numeric_rank(vals)?);
    }
    let rank = spectrum.iter().copied().max().unwrap_or(0);
    Ok(RankReport { rank, spectrum })
}

/// Maximum rank over `cfg.trials` random points.
pub fn generic_rank(m: &ExprMatrix, cfg: &SamplerConfig) -> Result<usize> {
    Ok(rank_report(m, cfg)?.rank)
}

/// Symbolic determinant of the square submatrix `rows` x `cols`.
pub fn determinant(m: &[Vec<Expr>], rows: &[usize], cols: &[usize]) -> Expr {
    assert_eq!(rows.len(), cols.len());
    assert!(cols.len() <= 63, "determinant too large");
    let mut memo: HashMap<u64, Expr> = HashMap::new();
    det_rec(m, rows, cols, 0, (1u64 << cols.len()) - 1, &mut memo)
}

fn det_rec(
    m: &[Vec<Expr>],
    rows: &[usize],
    cols: &[usize],
    depth: usize,
    mask: u64,
    memo: &mut HashMap<u64, Expr>,
) -> Expr {
    if depth == rows.len() {
        return Expr::one();
    }
    if let Some(e) = memo.get(&mask) {
        return e.clone();
    }
    let row = &m[rows[depth]];
    let mut terms = Vec::new();
    let mut sign_pos = true;
    for (k, &c) in cols.iter().enumerate() {
        if mask & (1 << k) == 0 {
            continue;
        }
        let a = &row[c];
        if !a.is_zero() {
            let minor = det_rec(m, rows, cols, depth + 1, mask & !(1 << k), memo);
            if !minor.is_zero() {
                let t = a * &minor;
                terms.push(if sign_pos { t } else { -t });
            }
        }
        sign_pos = !sign_pos;
    }
    let d = Expr::add_all(terms);
    memo.insert(mask, d.clone());
    d
}

/// Determinant of a full square matrix.
pub fn det(m: &[Vec<Expr>]) -> Expr {
    let idx: Vec<usize> = (0..m.len()).collect();
    determinant(m, &idx, &idx)
}

fn total_size(v: &[Expr]) -> usize {
    v.iter().map(Expr::size).sum()
}

/// A point of maximal rank with its echelon data.
pub(crate) fn best_point(
    m: &ExprMatrix,
    cfg: &SamplerConfig,
    salt: u64,
) -> Result<(Point, Echelon)> {
    let pts = sample_points(&m.vars(), &m.row_vecs(), cfg, salt, cfg.trials.max(1))?;
    let mut best: Option<(Point, Echelon)> = None;
    for (p, vals) in pts {
        let e = echelon(&vals)?;
        if best.as_ref().is_none_or(|(_, b)| e.rank > b.rank) {
            best = Some((p, e));
        }
    }
    Ok(best.expect("at least one trial"))
}

/// Basis of the right kernel, built by Cramer's rule on a maximal
/// nonsingular minor and certified entrywise.
pub fn kernel_basis(m: &ExprMatrix, cfg: &SamplerConfig) -> Result<Vec<Vec<Expr>>> {
    let n = m.cols;
    if m.rows == 0 || m.entries.iter().all(Expr::is_zero) {
        return Ok((0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { Expr::one() } else { Expr::zero() })
                    .collect()
            })
            .collect());
    }
    let (_, ech) = best_point(m, cfg, m.salt())?;
    let rows = m.row_vecs();
    let pr = &ech.pivot_rows;
    let pc = &ech.pivot_cols;
    let mut out = Vec::new();
    for f in (0..n).filter(|c| !pc.contains(c)) {
        let mut v = vec![Expr::zero(); n];
        v[f] = determinant(&rows, pr, pc);
        for (k, &ck) in pc.iter().enumerate() {
            let mut cols = pc.clone();
            cols[k] = f;
            v[ck] = -determinant(&rows, pr, &cols);
        }
        for (i, r) in m.apply(&v).iter().enumerate() {
            if !is_zero(r, cfg)? {
                return Err(Error::CertificationFailed(format!(
                    "kernel vector does not annihilate row {}",
                    i
                )));
            }
        }
        out.push(normalize_vector(v, f));
    }
    Ok(out)
}

/// Picks the smaller of `v` and `v / v[lead]`.
fn normalize_vector(v: Vec<Expr>, lead: usize) -> Vec<Expr> {
    if v[lead].is_one() {
        return v;
    }
    let inv = v[lead].recip();
    let scaled: Vec<Expr> = v.iter().map(|e| e * &inv).collect();
    if v[lead].as_const().is_some() || total_size(&scaled) <= total_size(&v) {
        scaled
    } else {
        v
    }
}

/// Rational constants `c` with `target = sum c_i vectors_i`, if they exist.
pub fn solve_constant_combination(
    vectors: &[Vec<Expr>],
    target: &[Expr],
    cfg: &SamplerConfig,
) -> Result<Option<Vec<Rational>>> {
    let k = vectors.len();
    let n = target.len();
    if vectors.iter().any(|v| v.len() != n) {
        return Err(Error::WrongShape("vectors of unequal length".into()));
    }
    // rows of the stacked system at a point: one per component
    let mut columns: Vec<Vec<Expr>> = (0..n)
        .map(|i| {
            let mut row: Vec<Expr> = vectors.iter().map(|v| v[i].clone()).collect();
            row.push(target[i].clone());
            row
        })
        .collect();
    columns.retain(|r| !r.iter().all(Expr::is_zero));
    if columns.is_empty() {
        return Ok(Some(vec![Rational::new(); k]));
    }
    let mut vars = BTreeSet::new();
    for r in &columns {
        for e in r {
            e.collect_vars(&mut vars);
        }
    }
    let salt = columns
        .iter()
        .flatten()
        .fold(0x5eed_u64, |h, e| h.rotate_left(7) ^ fingerprint(e));
    let npts = cfg.trials.max(3).max(k / n.max(1) + 2);
    let pts = sample_points(&vars, &columns, cfg, salt, npts)?;
    let stacked: Vec<Vec<Value>> = pts.into_iter().flat_map(|(_, v)| v).collect();
    let ech = echelon_limited(&stacked, k)?;
    // consistency: every non-pivot row must have a zero right-hand side
    for row in &ech.reduced[ech.rank..] {
        if !row[k].is_zero_within(cfg.float_tolerance) {
            return Ok(None);
        }
    }
    let mut coeffs = vec![Rational::new(); k];
    for (r, &c) in ech.pivot_cols.iter().enumerate() {
        coeffs[c] = match &ech.reduced[r][k] {
            Value::Exact(q) => q.clone(),
            Value::Approx(f) => match rationalize(f) {
                Some(q) => q,
                None => return Ok(None),
            },
        };
    }
    for i in 0..n {
        let combo = Expr::add_all(vectors.iter().zip(&coeffs).map(|(v, c)| v[i].scale(c)));
        if !is_zero(&(&target[i] - &combo), cfg)? {
            return Ok(None);
        }
    }
    Ok(Some(coeffs))
}

/// Best rational approximation with a small denominator, if it is very close.
pub(crate) fn rationalize(f: &Float) -> Option<Rational> {
    let exact = f.to_rational()?;
    let tol = Rational::from((1, 1_000_000_000_000_000_000u64));
    let (mut h0, mut h1) = (rug::Integer::from(0), rug::Integer::from(1));
    let (mut k0, mut k1) = (rug::Integer::from(1), rug::Integer::from(0));
    let mut x = exact.clone();
    for _ in 0..64 {
        let a = x.clone().floor().numer().clone();
        let h2 = Rational::from(&a * &h1).numer().clone() + &h0;
        let k2 = Rational::from(&a * &k1).numer().clone() + &k0;
        h0 = h1;
        k0 = k1;
        h1 = h2;
        k1 = k2;
        let approx = Rational::from((h1.clone(), k1.clone()));
        if Rational::from(&approx - &exact).abs() < tol {
            return if k1 < 1_000_000_000u64 {
                Some(approx)
            } else {
                None
            };
        }
        let frac = Rational::from(&x - &a);
        if frac == 0 {
            break;
        }
        x = frac.recip();
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    const VARS: [&str; 4] = ["x", "y", "z", "l"];

    fn mat(rows: &[&[&str]]) -> ExprMatrix {
        let cols = rows.first().map_or(0, |r| r.len());
        ExprMatrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|s| parse_expr(s, &VARS).unwrap()).collect())
                .collect(),
            cols,
        )
    }

    #[test]
    fn ranks() {
        let cfg = SamplerConfig::default();
        assert_eq!(
            generic_rank(&mat(&[&["1", "0"], &["0", "1"]]), &cfg).unwrap(),
            2
        );
        assert_eq!(
            generic_rank(&mat(&[&["x", "y"], &["x", "y"]]), &cfg).unwrap(),
            1
        );
        assert_eq!(generic_rank(&mat(&[&["0", "0"]]), &cfg).unwrap(), 0);
    }

    #[test]
    fn kernel_of_row() {
        let cfg = SamplerConfig::default();
        let k = kernel_basis(&mat(&[&["x", "y"]]), &cfg).unwrap();
        assert_eq!(k.len(), 1);
        let dot = Expr::var("x") * &k[0][0] + Expr::var("y") * &k[0][1];
        assert!(dot.is_zero());
        assert!(!k[0][1].is_zero());
    }

    #[test]
    fn kernel_of_zero_matrix() {
        let cfg = SamplerConfig::default();
        let k = kernel_basis(&mat(&[&["0", "0", "0"], &["0", "0", "0"]]), &cfg).unwrap();
        assert_eq!(k.len(), 3);
        assert!(k[1][1].is_one() && k[1][0].is_zero());
    }

    #[test]
    fn determinants() {
        let m = mat(&[&["x", "y"], &["z", "l"]]).row_vecs();
        assert_eq!(det(&m), parse_expr("x*l - y*z", &VARS).unwrap());
        let m = mat(&[&["1", "2", "3"], &["4", "5", "6"], &["7", "8", "10"]]).row_vecs();
        assert_eq!(det(&m), Expr::int(-3));
    }

    #[test]
    fn constant_combinations() {
        let cfg = SamplerConfig::default();
        let e = |s: &str| parse_expr(s, &VARS).unwrap();
        let vs = vec![vec![e("1"), e("0")], vec![e("0"), e("1")]];
        let c = solve_constant_combination(&vs, &[e("3"), e("-2")], &cfg)
            .unwrap()
            .unwrap();
        assert_eq!(c, vec![Rational::from(3), Rational::from(-2)]);
        let vs = vec![vec![e("x"), e("0")]];
        assert!(solve_constant_combination(&vs, &[e("1"), e("0")], &cfg)
            .unwrap()
            .is_none());
        let vs = vec![vec![e("sin(x)"), e("cos(x)")], vec![e("1"), e("x")]];
        let c =
            solve_constant_combination(&vs, &[e("1/2*sin(x) - 3"), e("1/2*cos(x) - 3*x")], &cfg)
                .unwrap()
                .unwrap();
        assert_eq!(c, vec![Rational::from((1, 2)), Rational::from(-3)]);
    }

    #[test]
    fn rationalize_recovers_small_fractions() {
        let f = Float::with_val(PRECISION, -7) / Float::with_val(PRECISION, 3);
        assert_eq!(rationalize(&f), Some(Rational::from((-7, 3))));
    }
}
