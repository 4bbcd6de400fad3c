use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use super::{Chart, Distribution, Evaluated, Probe, VectorField};
use crate::error::{Error, Result};
use crate::expr::{is_zero, Expr, SamplerConfig};

fn ordered<'a>(names: &[Arc<str>], map: &'a [(String, Expr)], what: &str) -> Result<Vec<&'a Expr>> {
    let keys: BTreeSet<&str> = map.iter().map(|(k, _)| k.as_str()).collect();
    let want: BTreeSet<&str> = names.iter().map(|c| &**c).collect();
    if keys != want || keys.len() != map.len() {
        return Err(Error::ChartMismatch(format!(
            "{} map does not cover the chart coordinates",
            what
        )));
    }
    Ok(names
        .iter()
        .map(|c| &map.iter().find(|(k, _)| k.as_str() == &**c).unwrap().1)
        .collect())
}

/// `true` when `outer ∘ inner` is the identity on `names`; `None` when the
/// sampler cannot decide (domain trouble).
fn composes_to_identity(
    outer: &[&Expr],
    inner: &HashMap<&str, Expr>,
    names: &[Arc<str>],
    cfg: &SamplerConfig,
) -> Result<Option<bool>> {
    for (e, c) in outer.iter().zip(names) {
        let diff = e.substitute(inner) - Expr::var(c);
        match is_zero(&diff, cfg) {
            Ok(true) => {}
            Ok(false) => return Ok(Some(false)),
            Err(Error::Domain(_)) | Err(Error::SamplingExhausted(_)) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    Ok(Some(true))
}

/// Pushes `d` forward along `y = forward(x)`, with `x = inverse(y)`.
///
/// `forward` maps each target coordinate to an expression in the source
/// coordinates; `inverse` maps each source coordinate to one in the target.
pub fn change_coordinates(
    d: &Distribution,
    forward: &[(String, Expr)],
    inverse: &[(String, Expr)],
    target: Arc<Chart>,
    cfg: &SamplerConfig,
) -> Result<Distribution> {
    let fwd = ordered(&target.coords, forward, "forward")?;
    let inv = ordered(&d.chart.coords, inverse, "inverse")?;
    let inv_bind: HashMap<&str, Expr> = d
        .chart
        .coords
        .iter()
        .map(|c| &**c)
        .zip(inv.iter().map(|e| (*e).clone()))
        .collect();
    let fwd_bind: HashMap<&str, Expr> = target
        .coords
        .iter()
        .map(|c| &**c)
        .zip(fwd.iter().map(|e| (*e).clone()))
        .collect();
    match composes_to_identity(&fwd, &inv_bind, &target.coords, cfg)? {
        Some(true) => {}
        Some(false) => {
            return Err(Error::NotInverse(
                "forward ∘ inverse is not the identity".into(),
            ))
        }
        None => {
            return Err(Error::CertificationFailed(
                "could not evaluate forward ∘ inverse at any sample point".into(),
            ))
        }
    }
    // Branch choices can make the other composition undecidable on the
    // sampled orthant; only a definite failure is reported.
    if composes_to_identity(&inv, &fwd_bind, &d.chart.coords, cfg)? == Some(false) {
        return Err(Error::NotInverse(
            "inverse ∘ forward is not the identity".into(),
        ));
    }
    let gens = d
        .generators
        .iter()
        .map(|g| VectorField {
            chart: target.clone(),
            coeffs: fwd
                .iter()
                .map(|phi| g.apply(phi).substitute(&inv_bind))
                .collect(),
        })
        .collect();
    Distribution::new(target, gens, cfg)
}

/// Checks that `map: total → base` restricts to a pointwise isomorphism
/// `total → base ∘ map`. `map` sends each base coordinate to an expression in
/// the total-space coordinates.
pub fn integrable_extension_check_mapped(
    total: &Distribution,
    map: &[(String, Expr)],
    base: &Distribution,
    cfg: &SamplerConfig,
) -> Result<bool> {
    let phi = ordered(&base.chart.coords, map, "projection")?;
    if total.rank() != base.rank() {
        return Ok(false);
    }
    let bind: HashMap<&str, Expr> = base
        .chart
        .coords
        .iter()
        .map(|c| &**c)
        .zip(phi.iter().map(|e| (*e).clone()))
        .collect();
    let pushed: Vec<VectorField> = total
        .generators
        .iter()
        .map(|g| VectorField {
            chart: base.chart.clone(),
            coeffs: phi.iter().map(|p| g.apply(p)).collect(),
        })
        .collect();
    let pulled: Vec<VectorField> = base
        .generators
        .iter()
        .map(|b| b.substitute(&bind))
        .collect();
    let mut all: Vec<&VectorField> = pushed.iter().collect();
    all.extend(pulled.iter());
    let probe = Probe::new(&total.chart, &all, cfg, "integrable_extension")?;
    let pe: Vec<Evaluated> = pushed.iter().map(|f| probe.eval(f)).collect();
    let be: Vec<Evaluated> = pulled.iter().map(|f| probe.eval(f)).collect();
    let prow: Vec<&Evaluated> = pe.iter().collect();
    let brow: Vec<&Evaluated> = be.iter().collect();
    let rp = probe.rank(&prow)?;
    if rp != total.rank() {
        return Ok(false);
    }
    let rb = probe.rank(&brow)?;
    let mut both = prow.clone();
    both.extend(brow);
    Ok(rb == rp && probe.rank(&both)? == rp)
}

/// [`integrable_extension_check_mapped`] for a coordinate projection that
/// forgets `projected_out`.
pub fn integrable_extension_check(
    total: &Distribution,
    projected_out: &[&str],
    base: &Distribution,
    cfg: &SamplerConfig,
) -> Result<bool> {
    let map: Vec<(String, Expr)> = total
        .chart
        .coords
        .iter()
        .filter(|c| !projected_out.contains(&&***c))
        .map(|c| (c.to_string(), Expr::var(c)))
        .collect();
    integrable_extension_check_mapped(total, &map, base, cfg)
}

#[cfg(test)]
mod tests {
    use super::super::tests::field;
    use super::super::{derived_flag, FlagMode};
    use super::*;
    use crate::expr::parse_expr;

    fn pe(s: &str) -> Expr {
        parse_expr(s, &["x", "y", "p", "X", "Y", "P", "z", "z1", "q"]).unwrap()
    }

    fn contact() -> Distribution {
        let ch = Arc::new(Chart::new("c", &["x", "y", "p"]).unwrap());
        let g = vec![field(&ch, &["1", "p", "0"]), field(&ch, &["0", "0", "1"])];
        Distribution::new(ch, g, &SamplerConfig::default()).unwrap()
    }

    #[test]
    fn legendre_like_change() {
        let cfg = SamplerConfig::default();
        let d = contact();
        let target = Arc::new(Chart::new("t", &["X", "Y", "P"]).unwrap());
        let fwd = vec![
            ("X".into(), pe("x")),
            ("Y".into(), pe("y + x")),
            ("P".into(), pe("p + 1")),
        ];
        let inv = vec![
            ("x".into(), pe("X")),
            ("y".into(), pe("Y - X")),
            ("p".into(), pe("P - 1")),
        ];
        let r = change_coordinates(&d, &fwd, &inv, target, &cfg).unwrap();
        assert_eq!(r.generators[0].coeffs[1], pe("P"));
        let f = derived_flag(&r, FlagMode::Weak, 8, &cfg).unwrap();
        assert_eq!(f.growth, vec![2, 3]);
    }

    #[test]
    fn bad_inverse() {
        let cfg = SamplerConfig::default();
        let target = Arc::new(Chart::new("t", &["X", "Y", "P"]).unwrap());
        let fwd = vec![
            ("X".into(), pe("x")),
            ("Y".into(), pe("y")),
            ("P".into(), pe("2*p")),
        ];
        let inv = vec![
            ("x".into(), pe("X")),
            ("y".into(), pe("Y")),
            ("p".into(), pe("P")),
        ];
        let r = change_coordinates(&contact(), &fwd, &inv, target, &cfg);
        assert!(matches!(r, Err(Error::NotInverse(_))));
    }

    #[test]
    fn prolongation_is_extension() {
        let cfg = SamplerConfig::default();
        let ch = Arc::new(Chart::new("e", &["x", "y", "p", "q"]).unwrap());
        let total = Distribution::new(
            ch.clone(),
            vec![
                field(&ch, &["1", "p", "q", "0"]),
                field(&ch, &["0", "0", "0", "1"]),
            ],
            &cfg,
        )
        .unwrap();
        // forgetting q is not an extension of the contact plane field
        assert!(!integrable_extension_check(&total, &["q"], &contact(), &cfg).unwrap());
        let ch2 = Arc::new(Chart::new("z", &["x", "y", "p", "z"]).unwrap());
        let ext = Distribution::new(
            ch2.clone(),
            vec![
                field(&ch2, &["1", "p", "0", "p^2"]),
                field(&ch2, &["0", "0", "1", "0"]),
            ],
            &cfg,
        )
        .unwrap();
        assert!(integrable_extension_check(&ext, &["z"], &contact(), &cfg).unwrap());
        let mism = integrable_extension_check(&ext, &["p"], &contact(), &cfg);
        assert!(matches!(mism, Err(Error::ChartMismatch(_))));
    }
}
