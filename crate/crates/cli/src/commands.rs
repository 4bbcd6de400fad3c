//! Command dispatch and report rendering.

use std::fmt::Write as _;
use std::sync::Arc;

use distflag_core::geom::{
    carnot_algebra, cauchy_characteristics, change_coordinates, deprolong, derived_flag,
    first_integral_check, goursat_verdict, integrable_extension_check,
    integrable_extension_check_mapped, monge_invariants, solvable_transversal_check,
    symmetry_check, Chart, Distribution, FlagMode, SymmetryMode, VectorField,
};
use distflag_core::jets::{
    cartan_distribution, characteristic_direction, prolong_vector_field, stabilize, PdeSystem,
};
use distflag_core::pipeline::{
    analyze, analyze_system, point_from_pairs, reduce_system, CarnotSection, Case,
    DistributionSummary, PipelineConfig, Route, SystemSection,
};
use distflag_core::{Error, ErrorClass, Expr, Rational, Result, SamplerConfig};
use serde::Serialize;
use serde_json::{json, Value};

use crate::document::{parse_document, Document, FieldsDecl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Flag,
    Cauchy,
    Reduce,
    Deprolong,
    Analyze,
    Classify,
    Carnot,
    Monge,
    CheckSym,
    CheckIntegral,
    CheckExtension,
    CheckSolvable,
    Prolong,
    Chars,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone)]
pub struct Options {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub tolerance: Option<f64>,
    pub point: Vec<(String, Rational)>,
    pub params: Vec<(String, Rational)>,
    pub route: Option<Route>,
    pub format: Format,
    pub max_steps: usize,
    pub expr: Option<String>,
    pub generalized: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            seed: None,
            trials: None,
            tolerance: None,
            point: Vec::new(),
            params: Vec::new(),
            route: None,
            format: Format::Text,
            max_steps: 16,
            expr: None,
            generalized: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Negative => 1,
        ErrorClass::Input => 2,
        ErrorClass::Certification => 3,
    }
}

/// Parses `text` and runs `cmd` on it.
pub fn run(cmd: Command, text: &str, opts: &Options) -> Outcome {
    match parse_document(text) {
        Ok(doc) => execute(cmd, doc, opts),
        Err(e) => failure(&e, opts),
    }
}

fn failure(e: &Error, opts: &Options) -> Outcome {
    let code = exit_code(e);
    let stdout = match opts.format {
        Format::Json => {
            let class = match e.class() {
                ErrorClass::Negative => "negative",
                ErrorClass::Input => "input",
                ErrorClass::Certification => "certification",
            };
            format!(
                "{}\n",
                serde_json::to_string_pretty(&json!({"error": e.to_string(), "class": class}))
                    .unwrap()
            )
        }
        Format::Text => String::new(),
    };
    Outcome {
        code,
        stdout,
        stderr: format!("error: {}\n", e),
    }
}

/// A command result: JSON body, text body, and whether the checked property holds.
struct Report {
    json: Value,
    text: String,
    positive: bool,
}

impl Report {
    fn info(json: Value, text: String) -> Report {
        Report {
            json,
            text,
            positive: true,
        }
    }
}

pub fn execute(cmd: Command, mut doc: Document, opts: &Options) -> Outcome {
    if let Err(e) = doc.pin_params(&opts.params) {
        return failure(&e, opts);
    }
    let ctx = Ctx {
        doc: &doc,
        opts,
        cfg: sampler_config(&doc, opts),
    };
    match ctx.dispatch(cmd) {
        Ok(r) => {
            let stdout = match opts.format {
                Format::Json => format!("{}\n", serde_json::to_string_pretty(&r.json).unwrap()),
                Format::Text => r.text,
            };
            Outcome {
                code: if r.positive { 0 } else { 1 },
                stdout,
                stderr: String::new(),
            }
        }
        Err(e) => failure(&e, opts),
    }
}

fn sampler_config(doc: &Document, opts: &Options) -> SamplerConfig {
    let mut cfg = SamplerConfig::default();
    if let Some(s) = opts.seed.or(doc.sampler.seed) {
        cfg.seed = s;
    }
    if let Some(t) = opts.trials.or(doc.sampler.trials) {
        cfg.trials = t;
    }
    if let Some(t) = opts.tolerance.or(doc.sampler.tolerance) {
        cfg.float_tolerance = t;
    }
    cfg
}

fn growth(v: &[usize]) -> String {
    let parts: Vec<String> = v.iter().map(|g| g.to_string()).collect();
    format!("({})", parts.join(","))
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn build(
    decl: &FieldsDecl,
    name: &str,
    base_point: Option<&Vec<(String, Rational)>>,
    cfg: &SamplerConfig,
) -> Result<Distribution> {
    let mut chart = Chart::new(name, &decl.chart)?;
    if let Some(p) = base_point {
        chart = chart.with_base_point(point_from_pairs(p))?;
    }
    let chart = Arc::new(chart);
    let gens = decl
        .fields
        .iter()
        .map(|f| VectorField::new(chart.clone(), f.clone()))
        .collect::<Result<Vec<_>>>()?;
    Distribution::new(chart, gens, cfg)
}

/// Moves a field onto `chart` by coordinate name; both charts must have the same coordinates.
fn rehome(f: &VectorField, chart: &Arc<Chart>) -> Result<VectorField> {
    if f.chart.dim() != chart.dim() {
        return Err(Error::ChartMismatch(format!(
            "field lives on ({}), expected ({})",
            f.chart.coords.join(", "),
            chart.coords.join(", ")
        )));
    }
    let coeffs = chart
        .coords
        .iter()
        .map(|c| {
            f.coeff(c).cloned().ok_or_else(|| {
                Error::ChartMismatch(format!("coordinate `{}` missing from the field's chart", c))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    VectorField::new(chart.clone(), coeffs)
}

struct Ctx<'a> {
    doc: &'a Document,
    opts: &'a Options,
    cfg: SamplerConfig,
}

/// The distribution a command acts on.
struct Subject {
    distribution: Distribution,
    system: Option<SystemSection>,
}

impl Ctx<'_> {
    fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            sampler: self.cfg.clone(),
            max_steps: self.opts.max_steps,
            route: self.opts.route.or(self.doc.route).unwrap_or_default(),
            slice: self.doc.slice.clone(),
            integrals: self.doc.candidates.integrals.clone(),
            point: if self.opts.point.is_empty() {
                None
            } else {
                Some(point_from_pairs(&self.opts.point))
            },
        }
    }

    fn system(&self) -> Result<PdeSystem> {
        let eq = self
            .doc
            .equations
            .as_ref()
            .ok_or_else(|| Error::WrongShape("this command needs a system document".into()))?;
        let eqs = eq.solved.iter().map(|(k, v)| (*k, v.clone())).collect();
        PdeSystem::new(&self.doc.name, eqs, &self.doc.free_params())
    }

    fn subject(&self) -> Result<Subject> {
        if let Some(decl) = &self.doc.distribution {
            let bp: Option<Vec<(String, Rational)>> = self
                .doc
                .base_point
                .as_ref()
                .map(|p| p.iter().map(|(k, v)| (k.clone(), v.clone())).collect());
            let name = if self.doc.name.is_empty() {
                "chart"
            } else {
                &self.doc.name
            };
            return Ok(Subject {
                distribution: build(decl, name, bp.as_ref(), &self.cfg)?,
                system: None,
            });
        }
        let sys = self.system()?;
        if self.doc.use_cartan {
            let (stab, _) = stabilize(&sys)?;
            return Ok(Subject {
                distribution: cartan_distribution(&stab, &self.cfg)?,
                system: None,
            });
        }
        let (d, s) = reduce_system(&sys, &self.pipeline())?;
        Ok(Subject {
            distribution: d,
            system: Some(s),
        })
    }

    fn dispatch(&self, cmd: Command) -> Result<Report> {
        match cmd {
            Command::Flag => self.flag(),
            Command::Cauchy => self.cauchy(),
            Command::Reduce => self.reduce(),
            Command::Deprolong => self.deprolong(),
            Command::Analyze => self.analyze(),
            Command::Classify => self.classify(),
            Command::Carnot => self.carnot(),
            Command::Monge => self.monge(),
            Command::CheckSym => self.check_sym(),
            Command::CheckIntegral => self.check_integral(),
            Command::CheckExtension => self.check_extension(),
            Command::CheckSolvable => self.check_solvable(),
            Command::Prolong => self.prolong(),
            Command::Chars => self.chars(),
        }
    }

    fn flag(&self) -> Result<Report> {
        let s = self.subject()?;
        let d = &s.distribution;
        let w = derived_flag(d, FlagMode::Weak, self.opts.max_steps, &self.cfg)?;
        let st = derived_flag(d, FlagMode::Strong, self.opts.max_steps, &self.cfg)?;
        let json = json!({
            "dim": d.dim(),
            "rank": d.rank(),
            "weak": {"growth": w.growth, "reduced_growth": w.reduced_growth},
            "strong": {"growth": st.growth, "reduced_growth": st.reduced_growth},
        });
        let text = format!(
            "dim {}, rank {}\nweak growth {}  reduced {}\nstrong growth {}  reduced {}\n",
            d.dim(),
            d.rank(),
            growth(&w.growth),
            growth(&w.reduced_growth),
            growth(&st.growth),
            growth(&st.reduced_growth)
        );
        Ok(Report::info(json, text))
    }

    fn cauchy(&self) -> Result<Report> {
        let d = if self.doc.equations.is_some() {
            let (stab, _) = stabilize(&self.system()?)?;
            cartan_distribution(&stab, &self.cfg)?
        } else {
            self.subject()?.distribution
        };
        let ch = cauchy_characteristics(&d, &self.cfg)?;
        let gens: Vec<String> = ch.generators.iter().map(|g| g.to_string()).collect();
        let mut text = format!("Cauchy characteristics: rank {}\n", ch.rank());
        for g in &gens {
            writeln!(text, "  {}", g).unwrap();
        }
        Ok(Report::info(
            json!({"rank": ch.rank(), "generators": gens}),
            text,
        ))
    }

    fn reduce(&self) -> Result<Report> {
        let sys = self.system()?;
        let (d, s) = reduce_system(&sys, &self.pipeline())?;
        let summary = DistributionSummary::of(&d);
        let mut text = format!(
            "reduced {} ({}) to dim {} = kappa + t + 2 = {} + {} + 2\n",
            s.name, s.type_string, s.mu, s.symbol.kappa, s.symbol.t
        );
        writeln!(text, "Cauchy characteristic {}", s.cauchy_characteristic).unwrap();
        writeln!(text, "slice {} = {}", s.slice.coord, s.slice.value).unwrap();
        writeln!(text, "chart ({})", summary.chart.join(", ")).unwrap();
        for g in &summary.generators {
            writeln!(text, "  {}", g).unwrap();
        }
        Ok(Report::info(
            json!({"system": to_json(&s), "distribution": to_json(&summary)}),
            text,
        ))
    }

    fn deprolong(&self) -> Result<Report> {
        let s = self.subject()?;
        let dp = deprolong(&s.distribution, None, &self.cfg)?;
        let w = derived_flag(
            &dp.distribution,
            FlagMode::Weak,
            self.opts.max_steps,
            &self.cfg,
        )?;
        let summary = DistributionSummary::of(&dp.distribution);
        let json = json!({
            "characteristic": dp.characteristic.to_string(),
            "slice": {"coord": dp.coord, "value": dp.value.to_string()},
            "distribution": to_json(&summary),
            "weak_growth": w.growth,
        });
        let mut text = format!(
            "de-prolonged along {}\nslice {} = {}, dim {}, weak growth {}\n",
            dp.characteristic,
            dp.coord,
            dp.value,
            summary.dim,
            growth(&w.growth)
        );
        for g in &summary.generators {
            writeln!(text, "  {}", g).unwrap();
        }
        Ok(Report::info(json, text))
    }

    fn analyze(&self) -> Result<Report> {
        let cfg = self.pipeline();
        let report = if self.doc.equations.is_some() && !self.doc.use_cartan {
            analyze_system(&self.system()?, &cfg)?.1
        } else {
            analyze(&self.subject()?.distribution, &cfg)?
        };
        Ok(Report::info(to_json(&report), report.to_string()))
    }

    fn classify(&self) -> Result<Report> {
        let s = self.subject()?;
        let d = &s.distribution;
        let w = derived_flag(d, FlagMode::Weak, self.opts.max_steps, &self.cfg)?;
        let m = d.dim() - w.growth.last().unwrap();
        let verdict = goursat_verdict(
            d,
            s.system.as_ref().map(|x| x.mu),
            self.opts.max_steps,
            &self.cfg,
        )?;
        let deprolongable = match deprolong(d, None, &self.cfg) {
            Ok(_) => true,
            Err(Error::NotDeprolongable(_)) => false,
            Err(e) => return Err(e),
        };
        let case = if m > 0 {
            Case::II
        } else if deprolongable {
            Case::I
        } else {
            Case::III
        };
        let json = json!({
            "verdict": to_json(&verdict),
            "case": to_json(&case),
            "first_integrals": m,
            "deprolongable": deprolongable,
            "weak_growth": w.growth,
        });
        let text = format!(
            "verdict {}\ncase {:?}\nfirst integrals {}\nde-prolongable {}\n",
            verdict, case, m, deprolongable
        );
        Ok(Report::info(json, text))
    }

    fn carnot(&self) -> Result<Report> {
        let s = self.subject()?;
        let point = if self.opts.point.is_empty() {
            None
        } else {
            Some(point_from_pairs(&self.opts.point))
        };
        let a = carnot_algebra(
            &s.distribution,
            point.as_ref(),
            self.opts.max_steps,
            &self.cfg,
        )?;
        let c = CarnotSection::of(&a);
        let mut text = format!(
            "Carnot algebra dims {}\nbasis {}\n",
            growth(&c.dims),
            c.labels.join(", ")
        );
        for b in &c.brackets {
            writeln!(text, "[{}, {}] = {}", b.left, b.right, b.value).unwrap();
        }
        Ok(Report::info(to_json(&c), text))
    }

    fn monge(&self) -> Result<Report> {
        let s = self.subject()?;
        let m = monge_invariants(&s.distribution, &self.cfg)?;
        let mut text = String::new();
        for (i, (t, nz)) in m.theta.iter().zip(&m.nonzero).enumerate() {
            writeln!(
                text,
                "Theta{} {} {}",
                i,
                if *nz { "nonzero" } else { "zero" },
                t
            )
            .unwrap();
        }
        Ok(Report::info(to_json(&m), text))
    }

    fn candidate_fields(&self, d: &Distribution) -> Result<Vec<VectorField>> {
        let c = &self.doc.candidates;
        let mut out = Vec::new();
        for f in &c.symmetries {
            out.push(VectorField::new(d.chart.clone(), f.clone())?);
        }
        if let Some(jet) = &c.jet {
            let ind: Vec<&str> = jet.independents.iter().map(String::as_str).collect();
            let deps: Vec<(&str, usize)> = jet
                .dependents
                .iter()
                .map(|(s, k)| (s.as_str(), *k))
                .collect();
            let base_names: Vec<&str> = ind
                .iter()
                .copied()
                .chain(deps.iter().map(|(s, _)| *s))
                .collect();
            let base = Arc::new(Chart::new("base", &base_names)?);
            for f in &c.point_fields {
                let pf = VectorField::new(base.clone(), f.clone())?;
                out.push(rehome(&prolong_vector_field(&pf, &ind, &deps)?, &d.chart)?);
            }
        }
        if out.is_empty() {
            return Err(Error::Schema {
                path: "/candidates".into(),
                msg: "no candidate fields".into(),
            });
        }
        Ok(out)
    }

    fn check_sym(&self) -> Result<Report> {
        let s = self.subject()?;
        let d = &s.distribution;
        let fields = self.candidate_fields(d)?;
        let mode = if self.opts.generalized {
            SymmetryMode::Generalized
        } else {
            self.doc.candidates.mode.unwrap_or(SymmetryMode::Strict)
        };
        let mut results = Vec::new();
        let mut text = String::new();
        for f in &fields {
            let ok = symmetry_check(d, std::slice::from_ref(f), mode, &self.cfg)?;
            writeln!(text, "{} {}", if ok { "pass" } else { "fail" }, f).unwrap();
            results.push(json!({"field": f.to_string(), "passed": ok}));
        }
        let all = symmetry_check(d, &fields, mode, &self.cfg)?;
        writeln!(
            text,
            "{} symmetry ({}): {}",
            if fields.len() > 1 { "joint" } else { "single" },
            to_json(&mode).as_str().unwrap(),
            if all { "pass" } else { "fail" }
        )
        .unwrap();
        let positive = all && results.iter().all(|r| r["passed"] == json!(true));
        Ok(Report {
            json: json!({"mode": to_json(&mode), "fields": results, "joint": all}),
            text,
            positive,
        })
    }

    fn check_integral(&self) -> Result<Report> {
        let s = self.subject()?;
        let d = &s.distribution;
        let mut fs: Vec<Expr> = Vec::new();
        if let Some(text) = &self.opts.expr {
            let chart = d.chart.clone();
            let params = self.doc.free_params();
            let allow = |n: &str| chart.index_of(n).is_some() || params.iter().any(|p| p == n);
            fs.push(distflag_core::expr::parse_expr_with(text, &allow)?);
        } else {
            fs.extend(self.doc.candidates.integrals.iter().map(|(e, _)| e.clone()));
        }
        if fs.is_empty() {
            return Err(Error::Schema {
                path: "/candidates/integrals".into(),
                msg: "no function given (use --expr)".into(),
            });
        }
        let mut results = Vec::new();
        let mut text = String::new();
        for f in &fs {
            let ok = first_integral_check(d, f, &self.cfg)?;
            writeln!(text, "{} {}", if ok { "pass" } else { "fail" }, f).unwrap();
            results.push(json!({"expr": f.to_string(), "passed": ok}));
        }
        let positive = results.iter().all(|r| r["passed"] == json!(true));
        Ok(Report {
            json: json!({"integrals": results}),
            text,
            positive,
        })
    }

    fn check_extension(&self) -> Result<Report> {
        let s = self.subject()?;
        let total = &s.distribution;
        let base_decl = self.doc.base.as_ref().ok_or_else(|| Error::Schema {
            path: "/base".into(),
            msg: "check-extension needs a base distribution".into(),
        })?;
        let base = build(base_decl, "base", None, &self.cfg)?;
        let maps = &self.doc.maps;
        let ok = if !maps.projection.is_empty() {
            integrable_extension_check_mapped(total, &maps.projection, &base, &self.cfg)?
        } else if !maps.forward.is_empty() {
            let target = Arc::new(Chart::new("target", &maps.target)?);
            let pushed =
                change_coordinates(total, &maps.forward, &maps.inverse, target, &self.cfg)?;
            let ident: Vec<(String, Expr)> = base
                .chart
                .coords
                .iter()
                .map(|c| (c.to_string(), Expr::var(c)))
                .collect();
            integrable_extension_check_mapped(&pushed, &ident, &base, &self.cfg)?
        } else {
            let out: Vec<&str> = maps.project_out.iter().map(String::as_str).collect();
            integrable_extension_check(total, &out, &base, &self.cfg)?
        };
        let text = format!(
            "integrable extension of ({}) over ({}): {}\n",
            total.chart.coords.join(", "),
            base.chart.coords.join(", "),
            if ok { "pass" } else { "fail" }
        );
        Ok(Report {
            json: json!({"extension": ok}),
            text,
            positive: ok,
        })
    }

    fn check_solvable(&self) -> Result<Report> {
        let s = self.subject()?;
        let d = &s.distribution;
        let fields = self.candidate_fields(d)?;
        let r = solvable_transversal_check(d, &fields, &self.cfg)?;
        let positive = r.is_symmetry_algebra && r.solvable == Some(true) && r.transversal;
        let mut text = format!(
            "symmetry algebra {}\nconstant structure {}\nsolvable {}\nderived length {}\nderived series {}\ntransversal {}\n",
            r.is_symmetry_algebra,
            r.closes_with_constants,
            r.solvable.map_or("unknown".into(), |b| b.to_string()),
            r.derived_length.map_or("unknown".into(), |b| b.to_string()),
            growth(&r.derived_series),
            r.transversal
        );
        for (i, j, c) in &r.structure_constants {
            writeln!(text, "[f{}, f{}] = ({})", i + 1, j + 1, c.join(", ")).unwrap();
        }
        Ok(Report {
            json: to_json(&r),
            text,
            positive,
        })
    }

    fn prolong(&self) -> Result<Report> {
        if self.doc.equations.is_some() {
            let (stab, profile) = stabilize(&self.system()?)?;
            let solved: serde_json::Map<String, Value> = stab
                .solved
                .iter()
                .map(|(k, v)| (format!("u{}{}", k.0, k.1), json!(v.to_string())))
                .collect();
            let coords = stab.internal_coords();
            let mut text = format!(
                "prolonged to order {} ({}), dim {}\n",
                stab.order,
                profile.type_string,
                stab.dim()
            );
            writeln!(text, "coordinates ({})", coords.join(", ")).unwrap();
            for (k, v) in &solved {
                writeln!(text, "{} = {}", k, v.as_str().unwrap()).unwrap();
            }
            let json = json!({"order": stab.order, "dim": stab.dim(), "coordinates": coords, "solved": solved, "symbol": to_json(&profile)});
            return Ok(Report::info(json, text));
        }
        let c = &self.doc.candidates;
        let jet = c.jet.as_ref().ok_or_else(|| Error::Schema {
            path: "/candidates/jet".into(),
            msg: "prolong needs equations or a jet spec".into(),
        })?;
        let ind: Vec<&str> = jet.independents.iter().map(String::as_str).collect();
        let deps: Vec<(&str, usize)> = jet
            .dependents
            .iter()
            .map(|(s, k)| (s.as_str(), *k))
            .collect();
        let base_names: Vec<&str> = ind
            .iter()
            .copied()
            .chain(deps.iter().map(|(s, _)| *s))
            .collect();
        let base = Arc::new(Chart::new("base", &base_names)?);
        let mut out = Vec::new();
        for f in &c.point_fields {
            out.push(
                prolong_vector_field(&VectorField::new(base.clone(), f.clone())?, &ind, &deps)?
                    .to_string(),
            );
        }
        let text = out.iter().map(|s| format!("{}\n", s)).collect();
        Ok(Report::info(json!({"prolonged": out}), text))
    }

    fn chars(&self) -> Result<Report> {
        let sys = self.system()?;
        let (stab, profile) = stabilize(&sys)?;
        let (a, b) = characteristic_direction(&sys, &self.cfg)?;
        let lambda = if b.is_zero() {
            None
        } else {
            Some((-&a / &b).to_string())
        };
        let json = json!({
            "symbol": to_json(&profile),
            "equation_dim": stab.dim(),
            "mu": profile.kappa + profile.t + 2,
            "direction": {"dx": a.to_string(), "dy": b.to_string()},
            "lambda": lambda,
        });
        let mut text = format!(
            "type {}\ng {}  t = {}  kappa = {}  omega = {}\nequation dim {}\n",
            profile.type_string,
            growth(&profile.g_dims),
            profile.t,
            profile.kappa,
            profile.omega,
            stab.dim()
        );
        match &lambda {
            Some(l) => writeln!(text, "lambda_char = {}", l).unwrap(),
            None => writeln!(text, "characteristic xi_x = 0 (direction D_x)").unwrap(),
        }
        Ok(Report::info(json, text))
    }
}
