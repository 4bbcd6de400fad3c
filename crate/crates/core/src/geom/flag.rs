use std::sync::Arc;

use serde::Serialize;

use super::{lie_bracket, Distribution, Evaluated, Probe, VectorField};
use crate::error::{Error, Result};
use crate::expr::SamplerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FlagMode {
    Weak,
    Strong,
}

#[derive(Debug, Clone)]
pub struct Flag {
    pub mode: FlagMode,
    pub steps: Vec<Distribution>,
    pub growth: Vec<usize>,
    pub reduced_growth: Vec<usize>,
}

impl Flag {
    /// The last (stable) step.
    pub fn closure(&self) -> &Distribution {
        self.steps.last().expect("flag has at least one step")
    }
}

pub(crate) fn reduce(growth: &[usize]) -> Vec<usize> {
    growth
        .iter()
        .enumerate()
        .map(|(i, &g)| if i == 0 { g } else { g - growth[i - 1] })
        .collect()
}

/// Weak flag: `Δ_{i+1} = Δ_i + [Δ_i, Δ]`. Strong flag: `∇_{i+1} = ∇_i + [∇_i, ∇_i]`.
pub fn derived_flag(
    d: &Distribution,
    mode: FlagMode,
    max_steps: usize,
    cfg: &SamplerConfig,
) -> Result<Flag> {
    build(d, mode, max_steps, None, cfg)
}

/// Like [`derived_flag`] but stops once `limit` growth entries are known.
pub(crate) fn flag_prefix(
    d: &Distribution,
    mode: FlagMode,
    limit: usize,
    cfg: &SamplerConfig,
) -> Result<Flag> {
    build(d, mode, usize::MAX, Some(limit), cfg)
}

fn build(
    d: &Distribution,
    mode: FlagMode,
    max_steps: usize,
    limit: Option<usize>,
    cfg: &SamplerConfig,
) -> Result<Flag> {
    let chart: &Arc<_> = &d.chart;
    let dim = d.dim();
    let gens: Vec<&VectorField> = d.generators.iter().collect();
    let probe = Probe::new(chart, &gens, cfg, "derived_flag")?;

    let mut basis: Vec<VectorField> = d.generators.clone();
    let mut evals: Vec<Evaluated> = basis.iter().map(|f| probe.eval(f)).collect();
    let mut rank = probe.rank(&evals.iter().collect::<Vec<_>>())?;
    let r = d.rank();
    let mut new_from = 0;
    let mut growth = vec![rank];
    let mut steps = vec![d.clone()];

    loop {
        if limit.is_some_and(|l| growth.len() >= l) || rank == dim {
            break;
        }
        let new_to = basis.len();
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        match mode {
            FlagMode::Weak => {
                for n in new_from..new_to {
                    for g in 0..r {
                        // the first step would otherwise list each pair twice
                        if g != n && (n >= r || g < n) {
                            pairs.push((g, n));
                        }
                    }
                }
            }
            FlagMode::Strong => {
                for b in new_from..new_to {
                    for a in 0..b {
                        pairs.push((a, b));
                    }
                }
            }
        }
        let mut added = 0;
        for (a, b) in pairs {
            if rank == dim {
                break;
            }
            let f = lie_bracket(&basis[a], &basis[b])?;
            if f.is_zero() {
                continue;
            }
            let fe = probe.eval(&f);
            let mut rows: Vec<&Evaluated> = evals.iter().collect();
            rows.push(&fe);
            let nr = probe.rank(&rows)?;
            if nr > rank {
                rank = nr;
                basis.push(f);
                evals.push(fe);
                added += 1;
            }
        }
        if added == 0 {
            break;
        }
        if growth.len() >= max_steps {
            return Err(Error::MaxStepsExceeded(max_steps));
        }
        new_from = new_to;
        growth.push(rank);
        steps.push(Distribution::new_unchecked(chart.clone(), basis.clone()));
    }
    let reduced_growth = reduce(&growth);
    Ok(Flag {
        mode,
        steps,
        growth,
        reduced_growth,
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::field;
    use super::super::Chart;
    use super::*;

    fn dist(coords: &[&str], gens: &[&[&str]]) -> Distribution {
        let ch = Arc::new(Chart::new("t", coords).unwrap());
        let g = gens.iter().map(|c| field(&ch, c)).collect();
        Distribution::new(ch, g, &SamplerConfig::default()).unwrap()
    }

    #[test]
    fn contact_growth() {
        let d = dist(&["x", "y", "y1"], &[&["1", "y1", "0"], &["0", "0", "1"]]);
        let cfg = SamplerConfig::default();
        for mode in [FlagMode::Weak, FlagMode::Strong] {
            let f = derived_flag(&d, mode, 16, &cfg).unwrap();
            assert_eq!(f.growth, vec![2, 3]);
            assert_eq!(f.reduced_growth, vec![2, 1]);
        }
    }

    #[test]
    fn hilbert_cartan_growth() {
        let d = dist(
            &["x", "z", "z1", "z2", "w"],
            &[&["1", "z1", "z2", "0", "z2^2"], &["0", "0", "0", "1", "0"]],
        );
        let f = derived_flag(&d, FlagMode::Weak, 16, &SamplerConfig::default()).unwrap();
        assert_eq!(f.growth, vec![2, 3, 5]);
        assert_eq!(f.reduced_growth, vec![2, 1, 2]);
    }

    #[test]
    fn involutive_stops_at_once() {
        let d = dist(&["x", "y", "z"], &[&["1", "0", "0"], &["0", "1", "0"]]);
        let f = derived_flag(&d, FlagMode::Weak, 16, &SamplerConfig::default()).unwrap();
        assert_eq!(f.growth, vec![2]);
    }

    #[test]
    fn max_steps_enforced() {
        let d = dist(
            &["x", "y", "y1", "y2", "y3"],
            &[&["1", "y1", "y2", "y3", "0"], &["0", "0", "0", "0", "1"]],
        );
        let r = derived_flag(&d, FlagMode::Weak, 2, &SamplerConfig::default());
        assert!(matches!(r, Err(Error::MaxStepsExceeded(2))));
        let f = derived_flag(&d, FlagMode::Weak, 16, &SamplerConfig::default()).unwrap();
        assert_eq!(f.growth, vec![2, 3, 4, 5]);
    }
}
