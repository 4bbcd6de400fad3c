use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Rational;
use serde::{Deserialize, Serialize};

use super::{evaluate, Expr, Point, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub seed: u64,
    pub trials: usize,
    /// Bound for random numerators and denominators.
    pub coordinate_range: u32,
    pub float_tolerance: f64,
    pub max_retries: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            seed: 0,
            trials: 5,
            coordinate_range: 1000,
            float_tolerance: 1e-9,
            max_retries: 20,
        }
    }
}

struct Fnv(u64);

impl Hasher for Fnv {
    fn finish(&self) -> u64 {
        self.0
    }
    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= *b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }
}

/// Deterministic structural hash, stable across runs and platforms.
pub fn fingerprint(e: &Expr) -> u64 {
    let mut h = Fnv(0xcbf29ce484222325);
    e.hash(&mut h);
    h.finish()
}

/// Stable hash of a call-site label.
pub fn salt_of(label: &str) -> u64 {
    let mut h = Fnv(0xcbf29ce484222325);
    h.write(label.as_bytes());
    h.finish()
}

/// Draws random positive rational points.
pub struct Sampler {
    rng: ChaCha8Rng,
    range: u32,
}

impl Sampler {
    pub fn new(cfg: &SamplerConfig, salt: u64) -> Sampler {
        let mut h = Fnv(0xcbf29ce484222325);
        h.write(&cfg.seed.to_le_bytes());
        h.write(&salt.to_le_bytes());
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(h.finish()),
            range: cfg.coordinate_range.max(2),
        }
    }

    pub fn rational(&mut self) -> Rational {
        let n = self.rng.gen_range(1..=self.range);
        let d = self.rng.gen_range(1..=self.range);
        Rational::from((n, d))
    }

    /// A fresh point; entries of `fixed` are kept as given.
    pub fn point<'a, I>(&mut self, vars: I, fixed: Option<&Point>) -> Point
    where
        I: IntoIterator<Item = &'a Arc<str>>,
    {
        let mut p = Point::new();
        for v in vars {
            let r = self.rational();
            let value = fixed.and_then(|f| f.get(v)).cloned().unwrap_or(r);
            p.insert(v.clone(), value);
        }
        p
    }
}

/// Evaluates `exprs` at fresh random points until all succeed.
pub(crate) fn sample_values(
    exprs: &[&Expr],
    sampler: &mut Sampler,
    cfg: &SamplerConfig,
) -> Result<Vec<Value>> {
    let mut vars = std::collections::BTreeSet::new();
    for e in exprs {
        e.collect_vars(&mut vars);
    }
    for _ in 0..cfg.max_retries.max(1) {
        let p = sampler.point(&vars, None);
        match exprs
            .iter()
            .map(|e| evaluate(e, &p))
            .collect::<Result<Vec<_>>>()
        {
            Ok(v) => return Ok(v),
            Err(Error::Domain(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::SamplingExhausted(format!(
        "{} consecutive domain errors",
        cfg.max_retries
    )))
}

/// Probabilistic zero test: exact at random rational points for the
/// algebraic class, within `float_tolerance` otherwise.
pub fn is_zero(e: &Expr, cfg: &SamplerConfig) -> Result<bool> {
    if e.is_zero() {
        return Ok(true);
    }
    if e.as_const().is_some() {
        return Ok(false);
    }
    let mut sampler = Sampler::new(cfg, fingerprint(e));
    for _ in 0..cfg.trials.max(1) {
        let v = sample_values(&[e], &mut sampler, cfg)?;
        if !v[0].is_zero_within(cfg.float_tolerance) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True when every expression is zero.
pub fn is_zero_all<'a, I: IntoIterator<Item = &'a Expr>>(
    es: I,
    cfg: &SamplerConfig,
) -> Result<bool> {
    for e in es {
        if !is_zero(e, cfg)? {
            return Ok(false);
        }
    }
    Ok(true)
}
