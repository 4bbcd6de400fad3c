//! Randomized invariants of the bracket, differentiation, rank and flag kernels.

use std::collections::BTreeMap;
use std::sync::Arc;

use distflag_core::expr::{evaluate, is_zero, parse_expr, Point};
use distflag_core::geom::{
    carnot_algebra, change_coordinates, derived_flag, goursat_verdict, lie_bracket, Chart,
    Distribution, FlagMode, VectorField,
};
use distflag_core::linalg::{generic_rank, kernel_basis, ExprMatrix};
use distflag_core::{Expr, Rational, SamplerConfig};
use proptest::prelude::*;

const XYZ: [&str; 3] = ["x", "y", "z"];

fn cfg() -> SamplerConfig {
    SamplerConfig::default()
}

fn chart3() -> Arc<Chart> {
    Arc::new(Chart::new("p", &XYZ).unwrap())
}

fn parse(s: &str, vars: &[&str]) -> Expr {
    parse_expr(s, vars).unwrap_or_else(|e| panic!("{}: {}", s, e))
}

/// Polynomial in x, y, z with small integer coefficients and degree at most 2.
fn poly() -> impl Strategy<Value = String> {
    const MONOMIALS: [&str; 10] = ["1", "x", "y", "z", "x^2", "x*y", "y*z", "z^2", "x*z", "y^2"];
    prop::collection::vec((-3i64..=3, 0usize..MONOMIALS.len()), 1..4).prop_map(|terms| {
        terms
            .iter()
            .map(|(c, m)| format!("({})*{}", c, MONOMIALS[*m]))
            .collect::<Vec<_>>()
            .join(" + ")
    })
}

fn field() -> impl Strategy<Value = VectorField> {
    prop::collection::vec(poly(), 3).prop_map(|cs| {
        let ch = chart3();
        VectorField::new(ch, cs.iter().map(|c| parse(c, &XYZ)).collect()).unwrap()
    })
}

fn all_zero(v: &VectorField) -> bool {
    v.coeffs.iter().all(|c| is_zero(c, &cfg()).unwrap())
}

/// Smooth expressions in x, y without poles on the positive quadrant.
fn smooth() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        (1i64..5).prop_map(|k| k.to_string())
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({}) + ({})", a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({})*({})", a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({})/(1 + ({})^2)", a, b)),
            inner.clone().prop_map(|a| format!("sin({})", a)),
            inner.clone().prop_map(|a| format!("cos({})", a)),
            inner.clone().prop_map(|a| format!("exp(sin({}))", a)),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({})^2)", a)),
        ]
    })
}

fn at(x: &Rational, y: &Rational) -> Point {
    BTreeMap::from([(Arc::from("x"), x.clone()), (Arc::from("y"), y.clone())])
}

fn eval_f64(e: &Expr, p: &Point) -> f64 {
    evaluate(e, p).unwrap().to_f64()
}

type Substitution = Vec<(String, Expr)>;

/// Triangular polynomial diffeomorphism `t_i = c_i + P_i(c_0..c_{i-1})` with its inverse.
fn triangular(
    coords: &[String],
    coeffs: &[(i64, i64)],
) -> (Substitution, Substitution, Vec<String>) {
    let target: Vec<String> = (0..coords.len()).map(|i| format!("t{}", i)).collect();
    let mut forward = Vec::new();
    let mut inverse: Vec<(String, Expr)> = Vec::new();
    for (i, c) in coords.iter().enumerate() {
        let (a, b) = coeffs[i % coeffs.len()];
        let shift = |v: &dyn Fn(usize) -> Expr| -> Expr {
            match i {
                0 => Expr::zero(),
                1 => Expr::int(a) * v(0).powi(2),
                _ => Expr::int(a) * v(i - 1) * v(i - 2) + Expr::int(b) * v(i - 1).powi(2),
            }
        };
        let src = |j: usize| Expr::var(&coords[j]);
        forward.push((target[i].clone(), Expr::var(c) + shift(&src)));
        let back: Vec<Expr> = inverse.iter().map(|(_, e)| e.clone()).collect();
        let inv_src = |j: usize| back[j].clone();
        inverse.push((c.clone(), Expr::var(&target[i]) - shift(&inv_src)));
    }
    (forward, inverse, target)
}

fn corpus() -> Vec<Distribution> {
    let specs: [(&[&str], &[&[&str]]); 5] = [
        (
            &["x", "y", "z"],
            &[&["1", "0", "-1/2*y"], &["0", "1", "1/2*x"]],
        ),
        (
            &["x", "y", "y1", "y2"],
            &[&["1", "y1", "y2", "0"], &["0", "0", "0", "1"]],
        ),
        (
            &["x", "y", "y1", "y2", "y3"],
            &[&["1", "y1", "y2", "y3", "0"], &["0", "0", "0", "0", "1"]],
        ),
        (
            &["x", "z", "z1", "z2", "w"],
            &[&["1", "z1", "z2", "0", "z2^2"], &["0", "0", "0", "1", "0"]],
        ),
        (
            &["x", "u", "u1", "u2", "v"],
            &[&["1", "u1", "u2", "0", "u^2"], &["0", "0", "0", "1", "0"]],
        ),
    ];
    specs
        .iter()
        .map(|(coords, gens)| {
            let ch = Arc::new(Chart::new("c", coords).unwrap());
            let g = gens
                .iter()
                .map(|cs| {
                    VectorField::new(ch.clone(), cs.iter().map(|s| parse(s, coords)).collect())
                        .unwrap()
                })
                .collect();
            Distribution::new(ch, g, &cfg()).unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bracket_is_antisymmetric(a in field(), b in field()) {
        let s = lie_bracket(&a, &b).unwrap().add(&lie_bracket(&b, &a).unwrap());
        prop_assert!(all_zero(&s));
    }

    #[test]
    fn bracket_satisfies_jacobi(a in field(), b in field(), c in field()) {
        let br = |u: &VectorField, v: &VectorField| lie_bracket(u, v).unwrap();
        let s = br(&a, &br(&b, &c)).add(&br(&b, &br(&c, &a))).add(&br(&c, &br(&a, &b)));
        prop_assert!(all_zero(&s));
    }

    #[test]
    fn derivative_matches_central_difference(f in smooth(), xn in 1i64..40, yn in 1i64..40) {
        let e = parse(&f, &["x", "y"]);
        let x = Rational::from((xn, 10));
        let y = Rational::from((yn, 10));
        let h = Rational::from((1, 1_000_000));
        for (var, dv) in [("x", e.diff("x")), ("y", e.diff("y"))] {
            let (plus, minus) = if var == "x" {
                (at(&Rational::from(&x + &h), &y), at(&Rational::from(&x - &h), &y))
            } else {
                (at(&x, &Rational::from(&y + &h)), at(&x, &Rational::from(&y - &h)))
            };
            let fd = (eval_f64(&e, &plus) - eval_f64(&e, &minus)) / 2e-6;
            let exact = eval_f64(&dv, &at(&x, &y));
            prop_assert!((fd - exact).abs() <= 1e-4 * exact.abs().max(1.0), "{}: d/d{} {} vs {}", f, var, exact, fd);
        }
    }

    #[test]
    fn rank_plus_kernel_is_width(rows in 1usize..4, cols in 1usize..5, entries in prop::collection::vec(poly(), 16)) {
        let m = ExprMatrix::new(rows, cols, entries[..rows * cols].iter().map(|s| parse(s, &XYZ)).collect());
        let r = generic_rank(&m, &cfg()).unwrap();
        let k = kernel_basis(&m, &cfg()).unwrap();
        prop_assert_eq!(r + k.len(), cols);
        for v in &k {
            for e in m.apply(v) {
                prop_assert!(is_zero(&e, &cfg()).unwrap());
            }
        }
    }

    #[test]
    fn flags_are_nested(f in poly(), g in poly()) {
        let coords = ["x", "y", "z", "w"];
        let ch = Arc::new(Chart::new("n", &coords).unwrap());
        let f = parse(&f, &XYZ);
        let g = parse(&g, &XYZ);
        let a = VectorField::new(ch.clone(), vec![Expr::one(), Expr::zero(), f, g]).unwrap();
        let b = VectorField::coordinate(&ch, "y").unwrap();
        let d = Distribution::new(ch, vec![a, b], &cfg()).unwrap();
        let weak = derived_flag(&d, FlagMode::Weak, 16, &cfg()).unwrap();
        let strong = derived_flag(&d, FlagMode::Strong, 16, &cfg()).unwrap();
        for flag in [&weak, &strong] {
            prop_assert!(flag.growth.windows(2).all(|w| w[0] < w[1]));
            for w in flag.steps.windows(2) {
                for v in &w[0].generators {
                    prop_assert!(w[1].contains(v, &cfg()).unwrap());
                }
            }
        }
        for (s, w) in strong.steps.iter().zip(&weak.steps) {
            for v in &s.generators {
                prop_assert!(w.contains(v, &cfg()).unwrap());
            }
        }
        prop_assert_eq!(strong.growth.last(), weak.growth.last());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn invariants_survive_polynomial_diffeomorphisms(which in 0usize..5, coeffs in prop::collection::vec((-2i64..=2, -2i64..=2), 1..4)) {
        let d = &corpus()[which];
        let coords: Vec<String> = d.chart.coords.iter().map(|c| c.to_string()).collect();
        let (fwd, inv, target) = triangular(&coords, &coeffs);
        let tchart = Arc::new(Chart::new("t", &target).unwrap());
        let e = change_coordinates(d, &fwd, &inv, tchart, &cfg()).unwrap();
        for mode in [FlagMode::Weak, FlagMode::Strong] {
            prop_assert_eq!(
                derived_flag(d, mode, 16, &cfg()).unwrap().growth,
                derived_flag(&e, mode, 16, &cfg()).unwrap().growth
            );
        }
        prop_assert_eq!(
            carnot_algebra(d, None, 16, &cfg()).unwrap().dims,
            carnot_algebra(&e, None, 16, &cfg()).unwrap().dims
        );
        prop_assert_eq!(
            goursat_verdict(d, None, 16, &cfg()).unwrap(),
            goursat_verdict(&e, None, 16, &cfg()).unwrap()
        );
    }

    #[test]
    fn growth_does_not_depend_on_seed(which in 0usize..5, seed in any::<u64>()) {
        let d = &corpus()[which];
        let other = SamplerConfig { seed, ..cfg() };
        prop_assert_eq!(
            derived_flag(d, FlagMode::Weak, 16, &cfg()).unwrap().growth,
            derived_flag(d, FlagMode::Weak, 16, &other).unwrap().growth
        );
    }
}
