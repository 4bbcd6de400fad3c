use serde::Serialize;

use super::{lie_bracket, Distribution, VectorField};
use crate::error::{Error, Result};
use crate::expr::{is_zero, Expr, SamplerConfig};
use crate::linalg::det;

#[derive(Debug, Clone, Serialize)]
pub struct MongeInvariants {
    /// `Θ_0 .. Θ_3` as coefficients of the volume form.
    #[serde(serialize_with = "exprs")]
    pub theta: [Expr; 4],
    pub nonzero: [bool; 4],
}

fn exprs<S: serde::Serializer>(v: &[Expr; 4], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|e| e.to_string()))
}

/// With `ζ, η` the generators, `Υ = ζ∧η∧[ζ,η]∧[ζ,[ζ,η]]` and
/// `Θ_0 = Υ∧[η,[ζ,η]]`, `Θ_1 = Υ∧[ζ,[ζ,[ζ,η]]]`, `Θ_2 = Υ∧[ζ,[η,[ζ,η]]]`,
/// `Θ_3 = Υ∧[η,[η,[ζ,η]]]`.
pub fn monge_invariants(d: &Distribution, cfg: &SamplerConfig) -> Result<MongeInvariants> {
    if d.rank() != 2 || d.dim() != 5 {
        return Err(Error::WrongShape(format!(
            "rank {} distribution on a {}-dimensional chart, expected rank 2 on 5",
            d.rank(),
            d.dim()
        )));
    }
    let z = &d.generators[0];
    let e = &d.generators[1];
    let b1 = lie_bracket(z, e)?;
    let b2 = lie_bracket(z, &b1)?;
    let b3 = lie_bracket(e, &b1)?;
    let last = [
        b3.clone(),
        lie_bracket(z, &b2)?,
        lie_bracket(z, &b3)?,
        lie_bracket(e, &b3)?,
    ];
    let wedge = |v: &VectorField| -> Expr {
        let m: Vec<Vec<Expr>> = [z, e, &b1, &b2, v]
            .iter()
            .map(|f| f.coeffs.clone())
            .collect();
        det(&m)
    };
    let theta = [
        wedge(&last[0]),
        wedge(&last[1]),
        wedge(&last[2]),
        wedge(&last[3]),
    ];
    let mut nonzero = [false; 4];
    for (flag, t) in nonzero.iter_mut().zip(&theta) {
        *flag = !is_zero(t, cfg)?;
    }
    Ok(MongeInvariants { theta, nonzero })
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
    fn j3_is_degenerate() {
        let d = dist(
            &["x", "y", "y1", "y2", "y3"],
            &[&["1", "y1", "y2", "y3", "0"], &["0", "0", "0", "0", "1"]],
        );
        let m = monge_invariants(&d, &SamplerConfig::default()).unwrap();
        assert!(!m.nonzero[0]);
        assert!(m.theta[0].is_zero());
    }

    #[test]
    fn hilbert_cartan_is_not() {
        let d = dist(
            &["x", "z", "z1", "z2", "w"],
            &[&["1", "z1", "z2", "0", "z2^2"], &["0", "0", "0", "1", "0"]],
        );
        let m = monge_invariants(&d, &SamplerConfig::default()).unwrap();
        assert!(m.nonzero[0]);
    }

    #[test]
    fn shape_checked() {
        let d = dist(&["x", "y", "z"], &[&["1", "0", "0"], &["0", "1", "x"]]);
        assert!(matches!(
            monge_invariants(&d, &SamplerConfig::default()),
            Err(Error::WrongShape(_))
        ));
    }
}
