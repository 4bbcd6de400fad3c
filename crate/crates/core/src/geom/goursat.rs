use serde::Serialize;

use super::flag::{derived_flag, FlagMode};
use super::Distribution;
use crate::error::{Error, Result};
use crate::expr::SamplerConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum GoursatVerdict {
    Goursat { d: usize },
    GoursatFrobenius { d: usize, m: usize },
    NotLinearizable { growth: Vec<usize> },
}

impl std::fmt::Display for GoursatVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GoursatVerdict::Goursat { d } => write!(f, "Goursat({})", d),
            GoursatVerdict::GoursatFrobenius { d, m } => {
                write!(f, "GoursatFrobenius({}, {})", d, m)
            }
            GoursatVerdict::NotLinearizable { growth } => {
                write!(f, "NotLinearizable({:?})", growth)
            }
        }
    }
}

/// Goursat test on the strong flag: its growth must rise by exactly one at
/// every step until the closure. `mu`, when known, fixes `d = mu - 2`.
pub fn goursat_verdict(
    d: &Distribution,
    mu: Option<usize>,
    max_steps: usize,
    cfg: &SamplerConfig,
) -> Result<GoursatVerdict> {
    if d.rank() != 2 {
        return Err(Error::WrongShape(format!(
            "rank {} distribution, expected rank 2",
            d.rank()
        )));
    }
    let flag = derived_flag(d, FlagMode::Strong, max_steps, cfg)?;
    let closure = *flag.growth.last().unwrap();
    let m = d.dim() - closure;
    if !flag.reduced_growth.iter().skip(1).all(|&g| g == 1) {
        return Ok(GoursatVerdict::NotLinearizable {
            growth: flag.growth,
        });
    }
    let deg = mu.map_or(closure.saturating_sub(2), |mu| mu.saturating_sub(2));
    Ok(if m == 0 {
        GoursatVerdict::Goursat { d: deg }
    } else {
        GoursatVerdict::GoursatFrobenius { d: deg, m }
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::super::tests::field;
    use super::super::Chart;
    use super::*;

    fn dist(coords: &[&str], gens: &[&[&str]]) -> Distribution {
        let ch = Arc::new(Chart::new("t", coords).unwrap());
        let g = gens.iter().map(|c| field(&ch, c)).collect();
        Distribution::new(ch, g, &SamplerConfig::default()).unwrap()
    }

    #[test]
    fn verdicts() {
        let cfg = SamplerConfig::default();
        let j3 = dist(
            &["x", "y", "y1", "y2", "y3"],
            &[&["1", "y1", "y2", "y3", "0"], &["0", "0", "0", "0", "1"]],
        );
        assert_eq!(
            goursat_verdict(&j3, None, 16, &cfg).unwrap(),
            GoursatVerdict::Goursat { d: 3 }
        );
        let fr = dist(
            &["x", "y", "y1", "c"],
            &[&["1", "y1", "0", "0"], &["0", "0", "1", "0"]],
        );
        assert_eq!(
            goursat_verdict(&fr, None, 16, &cfg).unwrap(),
            GoursatVerdict::GoursatFrobenius { d: 1, m: 1 }
        );
        let hc = dist(
            &["x", "z", "z1", "z2", "w"],
            &[&["1", "z1", "z2", "0", "z2^2"], &["0", "0", "0", "1", "0"]],
        );
        assert_eq!(
            goursat_verdict(&hc, None, 16, &cfg).unwrap(),
            GoursatVerdict::NotLinearizable {
                growth: vec![2, 3, 5]
            }
        );
        assert_eq!(GoursatVerdict::Goursat { d: 3 }.to_string(), "Goursat(3)");
    }
}
