//! JSON input documents.

use std::collections::BTreeMap;

use distflag_core::expr::parse_expr_with;
use distflag_core::geom::SymmetryMode;
use distflag_core::jets::parse_coord;
use distflag_core::pipeline::Route;
use distflag_core::{Error, Expr, Rational, Result};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Distribution,
    System,
    CheckSuite,
}

impl Kind {
    fn as_str(self) -> &'static str {
        match self {
            Kind::Distribution => "distribution",
            Kind::System => "system",
            Kind::CheckSuite => "check-suite",
        }
    }
}

/// A chart with generator coefficients, one row per field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldsDecl {
    pub chart: Vec<String>,
    pub fields: Vec<Vec<Expr>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equations {
    pub order: usize,
    pub solved: BTreeMap<(usize, usize), Expr>,
}

/// Prolongation setup for candidate point fields.
#[derive(Debug, Clone, PartialEq)]
pub struct JetSpec {
    pub independents: Vec<String>,
    pub dependents: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Maps {
    /// Target coordinate → expression in the source chart.
    pub forward: Vec<(String, Expr)>,
    /// Source coordinate → expression in the target chart.
    pub inverse: Vec<(String, Expr)>,
    pub target: Vec<String>,
    /// Base coordinate → expression in the total space.
    pub projection: Vec<(String, Expr)>,
    /// Coordinates forgotten by a coordinate projection.
    pub project_out: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Candidates {
    pub symmetries: Vec<Vec<Expr>>,
    pub mode: Option<SymmetryMode>,
    /// Functions with level values.
    pub integrals: Vec<(Expr, Rational)>,
    /// Point fields on the base of `jet`, to be prolonged.
    pub point_fields: Vec<Vec<Expr>>,
    pub jet: Option<JetSpec>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SamplerOverrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub kind: Kind,
    pub name: String,
    pub params: BTreeMap<String, Option<Rational>>,
    pub base_point: Option<BTreeMap<String, Rational>>,
    pub distribution: Option<FieldsDecl>,
    pub equations: Option<Equations>,
    /// For systems: analyze the Cartan distribution instead of its Cauchy quotient.
    pub use_cartan: bool,
    pub slice: Option<(String, Rational)>,
    pub route: Option<Route>,
    pub maps: Maps,
    pub base: Option<FieldsDecl>,
    pub candidates: Candidates,
    pub sampler: SamplerOverrides,
}

fn schema(path: &str, msg: impl Into<String>) -> Error {
    Error::Schema {
        path: if path.is_empty() {
            "/".into()
        } else {
            path.into()
        },
        msg: msg.into(),
    }
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

pub fn parse_rational(s: &str) -> Option<Rational> {
    s.trim().parse::<Rational>().ok()
}

struct Ctx<'a> {
    params: &'a BTreeMap<String, Option<Rational>>,
}

impl Ctx<'_> {
    fn expr(&self, v: &Value, path: &str, allowed: &dyn Fn(&str) -> bool) -> Result<Expr> {
        let text = match v {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            _ => return Err(schema(path, "expected an expression string")),
        };
        let ok = |s: &str| allowed(s) || self.params.contains_key(s);
        let e = parse_expr_with(&text, &ok).map_err(|e| match e {
            Error::Syntax { pos, msg } => Error::Syntax {
                pos,
                msg: format!("{} (in {})", msg, path),
            },
            Error::UnknownIdentifier { name, pos } => Error::UnknownIdentifier {
                name: format!("{}` in `{}", name, path),
                pos,
            },
            other => other,
        })?;
        Ok(self.pin(e))
    }

    fn pin(&self, mut e: Expr) -> Expr {
        for (k, v) in self.params {
            if let Some(q) = v {
                if e.contains_var(k) {
                    e = e.subs(k, &Expr::constant(q.clone()));
                }
            }
        }
        e
    }
}

fn obj<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| schema(path, "expected an object"))
}

fn arr<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| schema(path, "expected an array"))
}

fn string(v: &Value, path: &str) -> Result<String> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| schema(path, "expected a string"))
}

fn rational(v: &Value, path: &str) -> Result<Rational> {
    let s = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) if n.is_i64() || n.is_u64() => n.to_string(),
        _ => {
            return Err(schema(
                path,
                "expected a rational such as \"3\" or \"-1/2\"",
            ))
        }
    };
    parse_rational(&s).ok_or_else(|| schema(path, format!("`{}` is not a rational", s)))
}

fn names(v: &Value, path: &str) -> Result<Vec<String>> {
    let a = arr(v, path)?;
    let mut out = Vec::with_capacity(a.len());
    for (i, x) in a.iter().enumerate() {
        let s = string(x, &format!("{}/{}", path, i))?;
        if out.contains(&s) {
            return Err(schema(
                &format!("{}/{}", path, i),
                format!("duplicate coordinate `{}`", s),
            ));
        }
        out.push(s);
    }
    Ok(out)
}

const KEYS: &[&str] = &[
    "kind",
    "name",
    "chart",
    "params",
    "base_point",
    "fields",
    "equations",
    "use",
    "slice",
    "route",
    "maps",
    "base",
    "candidates",
    "sampler",
];

fn fields_decl(ctx: &Ctx, chart: Vec<String>, v: &Value, path: &str) -> Result<FieldsDecl> {
    let rows = arr(v, path)?;
    if rows.is_empty() {
        return Err(schema(path, "at least one field is required"));
    }
    let allow = |s: &str| chart.iter().any(|c| c == s);
    let mut fields = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let p = format!("{}/{}", path, i);
        let row = arr(r, &p)?;
        if row.len() != chart.len() {
            return Err(schema(
                &p,
                format!(
                    "field has {} coefficients, chart has {} coordinates",
                    row.len(),
                    chart.len()
                ),
            ));
        }
        fields.push(
            row.iter()
                .enumerate()
                .map(|(j, e)| ctx.expr(e, &format!("{}/{}", p, j), &allow))
                .collect::<Result<_>>()?,
        );
    }
    Ok(FieldsDecl { chart, fields })
}

fn jet_allowed(s: &str) -> bool {
    s == "x" || s == "y" || parse_coord(s).is_some()
}

fn expr_map(
    ctx: &Ctx,
    v: &Value,
    path: &str,
    allowed: &dyn Fn(&str) -> bool,
) -> Result<Vec<(String, Expr)>> {
    obj(v, path)?
        .iter()
        .map(|(k, e)| {
            Ok((
                k.clone(),
                ctx.expr(e, &format!("{}/{}", path, escape(k)), allowed)?,
            ))
        })
        .collect()
}

/// Parses and validates a document.
pub fn parse_document(text: &str) -> Result<Document> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| schema("", format!("invalid JSON: {}", e)))?;
    let top = obj(&root, "")?;
    for k in top.keys() {
        if !KEYS.contains(&k.as_str()) {
            return Err(schema(&format!("/{}", escape(k)), "unknown key"));
        }
    }
    let kind = match top
        .get("kind")
        .map(|v| string(v, "/kind"))
        .transpose()?
        .as_deref()
    {
        Some("distribution") => Kind::Distribution,
        Some("system") => Kind::System,
        Some("check-suite") => Kind::CheckSuite,
        Some(other) => return Err(schema("/kind", format!("unknown kind `{}`", other))),
        None => return Err(schema("/kind", "missing")),
    };
    let name = top
        .get("name")
        .map(|v| string(v, "/name"))
        .transpose()?
        .unwrap_or_default();

    let mut params = BTreeMap::new();
    if let Some(p) = top.get("params") {
        for (k, v) in obj(p, "/params")? {
            let path = format!("/params/{}", escape(k));
            if !k.chars().next().is_some_and(char::is_alphabetic) || jet_allowed(k) {
                return Err(schema(&path, format!("`{}` cannot name a parameter", k)));
            }
            let val = if v.is_null() {
                None
            } else {
                Some(rational(v, &path)?)
            };
            params.insert(k.clone(), val);
        }
    }
    let ctx = Ctx { params: &params };

    let chart = top.get("chart").map(|v| names(v, "/chart")).transpose()?;
    let distribution = match (chart, top.get("fields")) {
        (Some(c), Some(f)) => Some(fields_decl(&ctx, c, f, "/fields")?),
        (None, Some(_)) => return Err(schema("/chart", "required with `fields`")),
        (Some(_), None) => return Err(schema("/fields", "required with `chart`")),
        (None, None) => None,
    };
    let equations = match top.get("equations") {
        None => None,
        Some(v) => {
            let o = obj(v, "/equations")?;
            let order = o
                .get("order")
                .and_then(Value::as_u64)
                .ok_or_else(|| schema("/equations/order", "expected a positive integer"))?
                as usize;
            let solved_v = o
                .get("solved")
                .ok_or_else(|| schema("/equations/solved", "missing"))?;
            let mut solved = BTreeMap::new();
            for (k, e) in obj(solved_v, "/equations/solved")? {
                let path = format!("/equations/solved/{}", escape(k));
                let idx = parse_coord(&format!("u{}", k.trim_start_matches('u')))
                    .filter(|_| k.trim_start_matches('u').len() == 2)
                    .ok_or_else(|| schema(&path, "key must be two digits `ij` for u_{x^i y^j}"))?;
                if idx.0 + idx.1 > order || idx.0 + idx.1 == 0 {
                    return Err(schema(
                        &path,
                        format!("order {} is outside 1..={}", idx.0 + idx.1, order),
                    ));
                }
                solved.insert(idx, ctx.expr(e, &path, &jet_allowed)?);
            }
            if solved.is_empty() {
                return Err(schema(
                    "/equations/solved",
                    "at least one equation is required",
                ));
            }
            if solved.keys().all(|s| s.0 + s.1 < order) {
                return Err(schema(
                    "/equations/order",
                    "no equation has the declared order",
                ));
            }
            Some(Equations { order, solved })
        }
    };
    match kind {
        Kind::Distribution if distribution.is_none() => {
            return Err(schema("/fields", "required for kind distribution"))
        }
        Kind::System if equations.is_none() => {
            return Err(schema("/equations", "required for kind system"))
        }
        Kind::CheckSuite if distribution.is_none() && equations.is_none() => {
            return Err(schema(
                "/fields",
                "a check suite needs `fields` or `equations`",
            ))
        }
        _ => {}
    }
    if distribution.is_some() && equations.is_some() {
        return Err(schema(
            "/equations",
            "give either `fields` or `equations`, not both",
        ));
    }
    if kind == Kind::Distribution && equations.is_some() {
        return Err(schema("/equations", "not allowed for kind distribution"));
    }
    if kind == Kind::System && distribution.is_some() {
        return Err(schema("/fields", "not allowed for kind system"));
    }

    let total: Vec<String> = distribution
        .as_ref()
        .map(|d| d.chart.clone())
        .unwrap_or_default();
    let on_total = |s: &str| {
        if equations.is_some() {
            jet_allowed(s)
        } else {
            total.iter().any(|c| c == s)
        }
    };

    let base_point = match top.get("base_point") {
        None => None,
        Some(v) => {
            let Some(d) = &distribution else {
                return Err(schema(
                    "/base_point",
                    "only distribution charts carry a base point",
                ));
            };
            let mut p = BTreeMap::new();
            for (k, x) in obj(v, "/base_point")? {
                let path = format!("/base_point/{}", escape(k));
                if !d.chart.contains(k) {
                    return Err(schema(&path, format!("`{}` is not a chart coordinate", k)));
                }
                p.insert(k.clone(), rational(x, &path)?);
            }
            if p.len() != d.chart.len() {
                return Err(schema("/base_point", "must give every chart coordinate"));
            }
            Some(p)
        }
    };

    let use_cartan = match top
        .get("use")
        .map(|v| string(v, "/use"))
        .transpose()?
        .as_deref()
    {
        None | Some("reduced") => false,
        Some("cartan") => true,
        Some(other) => {
            return Err(schema(
                "/use",
                format!("expected `reduced` or `cartan`, got `{}`", other),
            ))
        }
    };
    if use_cartan && equations.is_none() {
        return Err(schema("/use", "only meaningful for systems"));
    }
    let slice = match top.get("slice") {
        None => None,
        Some(v) => {
            let o = obj(v, "/slice")?;
            let c = string(o.get("coord").unwrap_or(&Value::Null), "/slice/coord")?;
            let val = rational(o.get("value").unwrap_or(&json!("0")), "/slice/value")?;
            Some((c, val))
        }
    };
    let route = match top.get("route") {
        None => None,
        Some(v) => Some(
            string(v, "/route")?
                .parse::<Route>()
                .map_err(|e| schema("/route", e))?,
        ),
    };

    let mut maps = Maps::default();
    if let Some(v) = top.get("maps") {
        let o = obj(v, "/maps")?;
        for k in o.keys() {
            if !["forward", "inverse", "target", "projection", "project_out"].contains(&k.as_str())
            {
                return Err(schema(&format!("/maps/{}", escape(k)), "unknown key"));
            }
        }
        if let Some(t) = o.get("target") {
            maps.target = names(t, "/maps/target")?;
        }
        let target = maps.target.clone();
        let on_target = |s: &str| target.iter().any(|c| c == s);
        if let Some(f) = o.get("forward") {
            maps.forward = expr_map(&ctx, f, "/maps/forward", &on_total)?;
        }
        if let Some(f) = o.get("inverse") {
            maps.inverse = expr_map(&ctx, f, "/maps/inverse", &on_target)?;
        }
        if (maps.forward.is_empty() != maps.inverse.is_empty())
            || (!maps.forward.is_empty() && maps.target.is_empty())
        {
            return Err(schema(
                "/maps",
                "a coordinate change needs `forward`, `inverse` and `target`",
            ));
        }
        if let Some(f) = o.get("projection") {
            maps.projection = expr_map(&ctx, f, "/maps/projection", &on_total)?;
        }
        if let Some(f) = o.get("project_out") {
            maps.project_out = names(f, "/maps/project_out")?;
        }
    }
    let base = match top.get("base") {
        None => None,
        Some(v) => {
            let o = obj(v, "/base")?;
            let chart = names(
                o.get("chart")
                    .ok_or_else(|| schema("/base/chart", "missing"))?,
                "/base/chart",
            )?;
            let f = o
                .get("fields")
                .ok_or_else(|| schema("/base/fields", "missing"))?;
            Some(fields_decl(&ctx, chart, f, "/base/fields")?)
        }
    };

    let mut candidates = Candidates::default();
    if let Some(v) = top.get("candidates") {
        let o = obj(v, "/candidates")?;
        for k in o.keys() {
            if !["symmetries", "mode", "integrals", "point_fields", "jet"].contains(&k.as_str()) {
                return Err(schema(&format!("/candidates/{}", escape(k)), "unknown key"));
            }
        }
        if let Some(s) = o.get("symmetries") {
            let width = total.len();
            if equations.is_some() {
                return Err(schema(
                    "/candidates/symmetries",
                    "symmetry candidates need a `fields` chart",
                ));
            }
            for (i, r) in arr(s, "/candidates/symmetries")?.iter().enumerate() {
                let p = format!("/candidates/symmetries/{}", i);
                let row = arr(r, &p)?;
                if row.len() != width {
                    return Err(schema(
                        &p,
                        format!(
                            "field has {} coefficients, chart has {} coordinates",
                            row.len(),
                            width
                        ),
                    ));
                }
                candidates.symmetries.push(
                    row.iter()
                        .enumerate()
                        .map(|(j, e)| ctx.expr(e, &format!("{}/{}", p, j), &on_total))
                        .collect::<Result<_>>()?,
                );
            }
        }
        if let Some(m) = o.get("mode") {
            candidates.mode = Some(match string(m, "/candidates/mode")?.as_str() {
                "strict" => SymmetryMode::Strict,
                "generalized" => SymmetryMode::Generalized,
                other => {
                    return Err(schema(
                        "/candidates/mode",
                        format!("unknown mode `{}`", other),
                    ))
                }
            });
        }
        if let Some(s) = o.get("integrals") {
            for (i, it) in arr(s, "/candidates/integrals")?.iter().enumerate() {
                let p = format!("/candidates/integrals/{}", i);
                let (e, level) = match it {
                    Value::Object(io) => (
                        io.get("expr")
                            .ok_or_else(|| schema(&format!("{}/expr", p), "missing"))?,
                        io.get("level")
                            .map(|l| rational(l, &format!("{}/level", p)))
                            .transpose()?
                            .unwrap_or_default(),
                    ),
                    other => (other, Rational::new()),
                };
                candidates
                    .integrals
                    .push((ctx.expr(e, &p, &on_total)?, level));
            }
        }
        if let Some(j) = o.get("jet") {
            let jo = obj(j, "/candidates/jet")?;
            let independents = names(
                jo.get("independents").unwrap_or(&Value::Null),
                "/candidates/jet/independents",
            )?;
            let mut dependents = Vec::new();
            for (k, n) in obj(
                jo.get("dependents").unwrap_or(&Value::Null),
                "/candidates/jet/dependents",
            )? {
                let order = n.as_u64().ok_or_else(|| {
                    schema(
                        &format!("/candidates/jet/dependents/{}", escape(k)),
                        "expected an order",
                    )
                })?;
                dependents.push((k.clone(), order as usize));
            }
            candidates.jet = Some(JetSpec {
                independents,
                dependents,
            });
        }
        if let Some(pf) = o.get("point_fields") {
            let Some(jet) = &candidates.jet else {
                return Err(schema("/candidates/jet", "required with `point_fields`"));
            };
            let base: Vec<String> = jet
                .independents
                .iter()
                .cloned()
                .chain(jet.dependents.iter().map(|(d, _)| d.clone()))
                .collect();
            let allow = |s: &str| base.iter().any(|c| c == s);
            for (i, r) in arr(pf, "/candidates/point_fields")?.iter().enumerate() {
                let p = format!("/candidates/point_fields/{}", i);
                let row = arr(r, &p)?;
                if row.len() != base.len() {
                    return Err(schema(
                        &p,
                        format!(
                            "field has {} coefficients, base has {} coordinates",
                            row.len(),
                            base.len()
                        ),
                    ));
                }
                candidates.point_fields.push(
                    row.iter()
                        .enumerate()
                        .map(|(j, e)| ctx.expr(e, &format!("{}/{}", p, j), &allow))
                        .collect::<Result<_>>()?,
                );
            }
        }
    }
    if kind == Kind::CheckSuite
        && candidates.symmetries.is_empty()
        && candidates.integrals.is_empty()
        && candidates.point_fields.is_empty()
        && base.is_none()
    {
        return Err(schema(
            "/candidates",
            "a check suite needs candidates or a `base` distribution",
        ));
    }

    let mut sampler = SamplerOverrides::default();
    if let Some(v) = top.get("sampler") {
        let o = obj(v, "/sampler")?;
        sampler.seed = o
            .get("seed")
            .map(|s| {
                s.as_u64()
                    .ok_or_else(|| schema("/sampler/seed", "expected an integer"))
            })
            .transpose()?;
        sampler.trials = o
            .get("trials")
            .map(|s| {
                s.as_u64()
                    .map(|t| t as usize)
                    .ok_or_else(|| schema("/sampler/trials", "expected an integer"))
            })
            .transpose()?;
        sampler.tolerance = o
            .get("tolerance")
            .map(|s| {
                s.as_f64()
                    .ok_or_else(|| schema("/sampler/tolerance", "expected a number"))
            })
            .transpose()?;
    }

    Ok(Document {
        kind,
        name,
        params,
        base_point,
        distribution,
        equations,
        use_cartan,
        slice,
        route,
        maps,
        base,
        candidates,
        sampler,
    })
}

fn exprs(v: &[Expr]) -> Value {
    Value::Array(v.iter().map(|e| json!(e.to_string())).collect())
}

fn expr_obj(v: &[(String, Expr)]) -> Value {
    Value::Object(
        v.iter()
            .map(|(k, e)| (k.clone(), json!(e.to_string())))
            .collect(),
    )
}

impl Document {
    /// Canonical JSON form; parsing it gives back an equal document.
    pub fn to_json(&self) -> Value {
        let mut o = Map::new();
        o.insert("kind".into(), json!(self.kind.as_str()));
        if !self.name.is_empty() {
            o.insert("name".into(), json!(self.name));
        }
        if !self.params.is_empty() {
            o.insert(
                "params".into(),
                Value::Object(
                    self.params
                        .iter()
                        .map(|(k, v)| {
                            (
                                k.clone(),
                                v.as_ref().map_or(Value::Null, |q| json!(q.to_string())),
                            )
                        })
                        .collect(),
                ),
            );
        }
        if let Some(d) = &self.distribution {
            o.insert("chart".into(), json!(d.chart));
            o.insert(
                "fields".into(),
                Value::Array(d.fields.iter().map(|f| exprs(f)).collect()),
            );
        }
        if let Some(p) = &self.base_point {
            o.insert(
                "base_point".into(),
                Value::Object(
                    p.iter()
                        .map(|(k, v)| (k.clone(), json!(v.to_string())))
                        .collect(),
                ),
            );
        }
        if let Some(eq) = &self.equations {
            let solved: Map<String, Value> = eq
                .solved
                .iter()
                .map(|(s, e)| (format!("{}{}", s.0, s.1), json!(e.to_string())))
                .collect();
            o.insert(
                "equations".into(),
                json!({"order": eq.order, "solved": solved}),
            );
        }
        if self.use_cartan {
            o.insert("use".into(), json!("cartan"));
        }
        if let Some((c, v)) = &self.slice {
            o.insert("slice".into(), json!({"coord": c, "value": v.to_string()}));
        }
        if let Some(r) = &self.route {
            o.insert("route".into(), json!(r.to_string()));
        }
        let m = &self.maps;
        if *m != Maps::default() {
            let mut mo = Map::new();
            if !m.target.is_empty() {
                mo.insert("target".into(), json!(m.target));
            }
            if !m.forward.is_empty() {
                mo.insert("forward".into(), expr_obj(&m.forward));
                mo.insert("inverse".into(), expr_obj(&m.inverse));
            }
            if !m.projection.is_empty() {
                mo.insert("projection".into(), expr_obj(&m.projection));
            }
            if !m.project_out.is_empty() {
                mo.insert("project_out".into(), json!(m.project_out));
            }
            o.insert("maps".into(), Value::Object(mo));
        }
        if let Some(b) = &self.base {
            o.insert(
                "base".into(),
                json!({"chart": b.chart, "fields": Value::Array(b.fields.iter().map(|f| exprs(f)).collect())}),
            );
        }
        let c = &self.candidates;
        if *c != Candidates::default() {
            let mut co = Map::new();
            if !c.symmetries.is_empty() {
                co.insert(
                    "symmetries".into(),
                    Value::Array(c.symmetries.iter().map(|f| exprs(f)).collect()),
                );
            }
            if let Some(mode) = c.mode {
                co.insert("mode".into(), serde_json::to_value(mode).unwrap());
            }
            if !c.integrals.is_empty() {
                co.insert(
                    "integrals".into(),
                    Value::Array(
                        c.integrals
                            .iter()
                            .map(|(e, l)| json!({"expr": e.to_string(), "level": l.to_string()}))
                            .collect(),
                    ),
                );
            }
            if let Some(j) = &c.jet {
                let deps: Map<String, Value> = j
                    .dependents
                    .iter()
                    .map(|(d, n)| (d.clone(), json!(n)))
                    .collect();
                co.insert(
                    "jet".into(),
                    json!({"independents": j.independents, "dependents": deps}),
                );
            }
            if !c.point_fields.is_empty() {
                co.insert(
                    "point_fields".into(),
                    Value::Array(c.point_fields.iter().map(|f| exprs(f)).collect()),
                );
            }
            o.insert("candidates".into(), Value::Object(co));
        }
        let s = &self.sampler;
        if *s != SamplerOverrides::default() {
            let mut so = Map::new();
            if let Some(x) = s.seed {
                so.insert("seed".into(), json!(x));
            }
            if let Some(x) = s.trials {
                so.insert("trials".into(), json!(x));
            }
            if let Some(x) = s.tolerance {
                so.insert("tolerance".into(), json!(x));
            }
            o.insert("sampler".into(), Value::Object(so));
        }
        Value::Object(o)
    }

    /// Parameters left symbolic.
    pub fn free_params(&self) -> Vec<String> {
        self.params
            .iter()
            .filter(|(_, v)| v.is_none())
            .map(|(k, _)| k.clone())
            .collect()
    }

    /// Pins parameters from the command line; returns an error for unknown names.
    pub fn pin_params(&mut self, pins: &[(String, Rational)]) -> Result<()> {
        for (k, v) in pins {
            if !self.params.contains_key(k) {
                return Err(schema(
                    "/params",
                    format!("document has no parameter `{}`", k),
                ));
            }
            self.params.insert(k.clone(), Some(v.clone()));
        }
        let params = self.params.clone();
        let ctx = Ctx { params: &params };
        let pin_all = |v: &mut Vec<Expr>| v.iter_mut().for_each(|e| *e = ctx.pin(e.clone()));
        if let Some(d) = &mut self.distribution {
            d.fields.iter_mut().for_each(pin_all);
        }
        if let Some(b) = &mut self.base {
            b.fields.iter_mut().for_each(pin_all);
        }
        if let Some(eq) = &mut self.equations {
            eq.solved.values_mut().for_each(|e| *e = ctx.pin(e.clone()));
        }
        for m in [
            &mut self.maps.forward,
            &mut self.maps.inverse,
            &mut self.maps.projection,
        ] {
            m.iter_mut().for_each(|(_, e)| *e = ctx.pin(e.clone()));
        }
        let c = &mut self.candidates;
        c.symmetries.iter_mut().for_each(pin_all);
        c.point_fields.iter_mut().for_each(pin_all);
        c.integrals
            .iter_mut()
            .for_each(|(e, _)| *e = ctx.pin(e.clone()));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heisenberg() {
        let d = parse_document(r#"{"kind":"distribution","chart":["x","y","z"],"fields":[["1","0","0"],["0","1","x"]]}"#)
            .unwrap();
        let f = d.distribution.unwrap();
        assert_eq!(f.chart, vec!["x", "y", "z"]);
        assert_eq!(f.fields[1][2], Expr::var("x"));
    }

    #[test]
    fn mismatched_field_length() {
        let e =
            parse_document(r#"{"kind":"distribution","chart":["x","y","z"],"fields":[["1","0"]]}"#)
                .unwrap_err();
        match e {
            Error::Schema { path, .. } => assert_eq!(path, "/fields/0"),
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn unknown_identifier_in_field() {
        let e = parse_document(r#"{"kind":"distribution","chart":["x","y"],"fields":[["1","w"]]}"#)
            .unwrap_err();
        assert!(matches!(e, Error::UnknownIdentifier { .. }), "{:?}", e);
    }

    #[test]
    fn system_keys() {
        let d = parse_document(
            r#"{"kind":"system","params":{"m":null},"equations":{"order":2,"solved":{"11":"u20^m","02":"m^2/(2*m - 1)*u20^(2*m - 1)"}}}"#,
        )
        .unwrap();
        assert_eq!(d.free_params(), vec!["m"]);
        let eq = d.equations.as_ref().unwrap();
        assert!(eq.solved.contains_key(&(1, 1)));
        let bad = parse_document(r#"{"kind":"system","equations":{"order":2,"solved":{"3":"0"}}}"#)
            .unwrap_err();
        assert!(matches!(bad, Error::Schema { ref path, .. } if path == "/equations/solved/3"));
    }

    #[test]
    fn pinned_parameter_is_substituted() {
        let mut d = parse_document(
            r#"{"kind":"system","params":{"m":null},"equations":{"order":2,"solved":{"11":"u20^m","02":"0"}}}"#,
        )
        .unwrap();
        d.pin_params(&[("m".into(), Rational::from(3))]).unwrap();
        assert_eq!(d.equations.unwrap().solved[&(1, 1)].to_string(), "u20^3");
    }

    #[test]
    fn round_trip() {
        let d = parse_document(
            r#"{"kind":"check-suite","name":"t","chart":["x","y","p"],"fields":[["1","p","0"],["0","0","1"]],
                "base_point":{"x":"0","y":"1/2","p":"1"},
                "candidates":{"symmetries":[["0","1","0"]],"mode":"generalized","integrals":["x - x"]},
                "sampler":{"seed":3}}"#,
        )
        .unwrap();
        let again = parse_document(&d.to_json().to_string()).unwrap();
        assert_eq!(d, again);
    }
}
