//! Reduction workflow: system → Cartan distribution → Cauchy quotient →
//! flags, verdicts, de-prolongation chain and Carnot data.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rug::Rational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, Point, SamplerConfig};
use crate::geom::{
    carnot_algebra, cauchy_characteristics, deprolong, derived_flag, first_integral_check,
    goursat_verdict, reduce_at_default_slice, restrict_to_level, transversal_reduction,
    CarnotAlgebra, Distribution, FlagMode, GoursatVerdict, VectorField,
};
use crate::jets::{
    cartan_distribution, characteristic_direction, stabilize, PdeSystem, SymbolProfile,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    #[default]
    DeprolongFirst,
    RestrictFirst,
}

impl std::str::FromStr for Route {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Route, String> {
        match s {
            "deprolong-first" => Ok(Route::DeprolongFirst),
            "restrict-first" => Ok(Route::RestrictFirst),
            _ => Err(format!("unknown route `{}`", s)),
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Route::DeprolongFirst => "deprolong-first",
            Route::RestrictFirst => "restrict-first",
        })
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub sampler: SamplerConfig,
    pub max_steps: usize,
    pub route: Route,
    /// Slice for the Cauchy quotient of a system; the default slice otherwise.
    pub slice: Option<(String, Rational)>,
    /// First integrals with level values, used to restrict in case II.
    pub integrals: Vec<(Expr, Rational)>,
    /// Point for the Carnot algebra; the base point or a sampled regular point otherwise.
    pub point: Option<Point>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sampler: SamplerConfig::default(),
            max_steps: 16,
            route: Route::default(),
            slice: None,
            integrals: Vec::new(),
            point: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Case {
    I,
    II,
    III,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DistributionSummary {
    pub chart: Vec<String>,
    pub dim: usize,
    pub rank: usize,
    pub generators: Vec<String>,
    pub base_point: Option<BTreeMap<String, String>>,
}

impl DistributionSummary {
    pub fn of(d: &Distribution) -> DistributionSummary {
        DistributionSummary {
            chart: d.chart.coords.iter().map(|c| c.to_string()).collect(),
            dim: d.dim(),
            rank: d.rank(),
            generators: d.generators.iter().map(|g| g.to_string()).collect(),
            base_point: d.chart.base_point.as_ref().map(point_strings),
        }
    }
}

fn point_strings(p: &Point) -> BTreeMap<String, String> {
    p.iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlagSummary {
    pub growth: Vec<usize>,
    pub reduced_growth: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Slice {
    pub coord: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SystemSection {
    pub name: String,
    pub type_string: String,
    pub symbol: SymbolProfile,
    /// Order of the stabilized system.
    pub order: usize,
    /// Dimension of the stabilized equation manifold.
    pub equation_dim: usize,
    pub cartan_growth: Vec<usize>,
    /// Characteristic direction `a·D_x + b·D_y` from the symbols.
    pub characteristic: String,
    pub cauchy_characteristic: String,
    /// The Cauchy field lies in `⟨a·D_x + b·D_y, ∂_top⟩`.
    pub collinear: bool,
    pub slice: Slice,
    pub mu: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainStep {
    pub operation: String,
    pub detail: String,
    pub dim: usize,
    pub weak_growth: Vec<usize>,
    pub strong_growth: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BracketEntry {
    pub left: String,
    pub right: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CarnotSection {
    pub point: BTreeMap<String, String>,
    pub dims: Vec<usize>,
    pub labels: Vec<String>,
    pub brackets: Vec<BracketEntry>,
}

impl CarnotSection {
    pub fn of(a: &CarnotAlgebra) -> CarnotSection {
        CarnotSection {
            point: point_strings(&a.point),
            dims: a.dims.clone(),
            labels: a.labels.clone(),
            brackets: a
                .brackets
                .iter()
                .map(|(i, j, c)| BracketEntry {
                    left: a.labels[*i].clone(),
                    right: a.labels[*j].clone(),
                    value: a.format_vector(c),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub kind: String,
    pub subject: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReductionReport {
    pub system: Option<SystemSection>,
    pub distribution: DistributionSummary,
    pub weak_flag: FlagSummary,
    pub strong_flag: FlagSummary,
    pub first_integrals: usize,
    pub goursat: GoursatVerdict,
    pub case: Case,
    pub route: Route,
    pub chain: Vec<ChainStep>,
    pub final_distribution: DistributionSummary,
    pub carnot: Option<CarnotSection>,
    pub carnot_note: Option<String>,
    pub checks: Vec<CheckResult>,
}

fn flags(d: &Distribution, cfg: &PipelineConfig) -> Result<(FlagSummary, FlagSummary)> {
    let w = derived_flag(d, FlagMode::Weak, cfg.max_steps, &cfg.sampler)?;
    let s = derived_flag(d, FlagMode::Strong, cfg.max_steps, &cfg.sampler)?;
    Ok((
        FlagSummary {
            growth: w.growth,
            reduced_growth: w.reduced_growth,
        },
        FlagSummary {
            growth: s.growth,
            reduced_growth: s.reduced_growth,
        },
    ))
}

/// Cauchy quotient of the Cartan distribution of a class-one system.
pub fn reduce_system(
    sys: &PdeSystem,
    cfg: &PipelineConfig,
) -> Result<(Distribution, SystemSection)> {
    let sc = &cfg.sampler;
    let (stab, symbol) = stabilize(sys)?;
    let (a, b) = characteristic_direction(sys, sc)?;
    let ce = cartan_distribution(&stab, sc)?;
    let cartan_growth = derived_flag(&ce, FlagMode::Weak, cfg.max_steps, sc)?.growth;
    let ch = cauchy_characteristics(&ce, sc)?;
    if ch.rank() != 1 {
        return Err(Error::NotClassOne(format!(
            "Cauchy space of the Cartan distribution has rank {}",
            ch.rank()
        )));
    }
    let xi = ch.generators[0].clone();
    let line = Distribution::new(
        ce.chart.clone(),
        vec![characteristic_field(&ce, &a, &b), ce.generators[2].clone()],
        sc,
    )?;
    let collinear = line.contains(&xi, sc)?;
    let (reduced, coord, value) = match &cfg.slice {
        Some((c, v)) => (
            transversal_reduction(&ce, &xi, c, v, sc)?,
            c.clone(),
            v.clone(),
        ),
        None => reduce_at_default_slice(&ce, &xi, sc)?,
    };
    let section = SystemSection {
        name: sys.name.clone(),
        type_string: symbol.type_string.clone(),
        order: stab.order,
        equation_dim: stab.dim(),
        cartan_growth,
        characteristic: direction_string(&a, &b),
        cauchy_characteristic: xi.to_string(),
        collinear,
        slice: Slice {
            coord,
            value: value.to_string(),
        },
        mu: reduced.dim(),
        symbol,
    };
    Ok((reduced, section))
}

struct Walker<'a> {
    cfg: &'a PipelineConfig,
    cur: Distribution,
    /// Integrals still to use, transported to the current chart.
    integrals: Vec<(Expr, Rational)>,
    chain: Vec<ChainStep>,
    checks: Vec<CheckResult>,
}

impl Walker<'_> {
    fn record(&mut self, operation: &str, detail: String) -> Result<()> {
        let (w, s) = flags(&self.cur, self.cfg)?;
        self.chain.push(ChainStep {
            operation: operation.into(),
            detail,
            dim: self.cur.dim(),
            weak_growth: w.growth,
            strong_growth: s.growth,
        });
        Ok(())
    }

    fn transport(&mut self, coord: &str, value: &Expr) {
        for (f, _) in &mut self.integrals {
            *f = f.subs(coord, value);
        }
    }

    fn deprolong_all(&mut self) -> Result<()> {
        loop {
            if self.cur.rank() != 2 {
                return Ok(());
            }
            match deprolong(&self.cur, None, &self.cfg.sampler) {
                Ok(dp) => {
                    self.transport(&dp.coord, &Expr::constant(dp.value.clone()));
                    self.cur = dp.distribution;
                    self.record("deprolong", format!("slice {} = {}", dp.coord, dp.value))?;
                }
                Err(Error::NotDeprolongable(_)) => return Ok(()),
                Err(e) => return Err(e),
            }
        }
    }

    fn restrict_all(&mut self) -> Result<()> {
        while !self.integrals.is_empty() {
            let (f, value) = self.integrals.remove(0);
            let ok = first_integral_check(&self.cur, &f, &self.cfg.sampler)?;
            self.checks.push(CheckResult {
                kind: "integral".into(),
                subject: f.to_string(),
                passed: ok,
            });
            if !ok {
                continue;
            }
            let r = restrict_to_level(&self.cur, &f, &value, &self.cfg.sampler)?;
            self.transport(&r.coord, &r.solved);
            self.cur = r.distribution;
            self.record(
                "restrict",
                format!("{} = {}, solved for {}", f, value, r.coord),
            )?;
        }
        Ok(())
    }
}

/// Flags, verdicts, de-prolongation chain and Carnot data of a rank-2 distribution.
pub fn analyze(d: &Distribution, cfg: &PipelineConfig) -> Result<ReductionReport> {
    analyze_with_mu(d, None, cfg)
}

fn analyze_with_mu(
    d: &Distribution,
    mu: Option<usize>,
    cfg: &PipelineConfig,
) -> Result<ReductionReport> {
    if d.rank() != 2 {
        return Err(Error::WrongShape(format!(
            "rank {} distribution, expected rank 2",
            d.rank()
        )));
    }
    let sc = &cfg.sampler;
    let (weak, strong) = flags(d, cfg)?;
    let m = d.dim() - weak.growth.last().unwrap();
    let goursat = goursat_verdict(d, mu, cfg.max_steps, sc)?;
    let deprolongable = match deprolong(d, None, sc) {
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

    let mut w = Walker {
        cfg,
        cur: d.clone(),
        integrals: cfg.integrals.clone(),
        chain: Vec::new(),
        checks: Vec::new(),
    };
    match cfg.route {
        Route::DeprolongFirst => {
            w.deprolong_all()?;
            if !w.integrals.is_empty() {
                w.restrict_all()?;
                w.deprolong_all()?;
            }
        }
        Route::RestrictFirst => {
            w.restrict_all()?;
            w.deprolong_all()?;
        }
    }

    let (carnot, carnot_note) = match carnot_algebra(&w.cur, cfg.point.as_ref(), cfg.max_steps, sc)
    {
        Ok(a) => (Some(CarnotSection::of(&a)), None),
        Err(e @ Error::NotFullyNonholonomic { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    Ok(ReductionReport {
        system: None,
        distribution: DistributionSummary::of(d),
        weak_flag: weak,
        strong_flag: strong,
        first_integrals: m,
        goursat,
        case,
        route: cfg.route,
        chain: w.chain,
        final_distribution: DistributionSummary::of(&w.cur),
        carnot,
        carnot_note,
        checks: w.checks,
    })
}

/// [`reduce_system`] followed by [`analyze`] of the reduced distribution.
pub fn analyze_system(
    sys: &PdeSystem,
    cfg: &PipelineConfig,
) -> Result<(Distribution, ReductionReport)> {
    let (reduced, section) = reduce_system(sys, cfg)?;
    let mut report = analyze_with_mu(&reduced, Some(section.mu), cfg)?;
    report.system = Some(section);
    Ok((reduced, report))
}

/// `a·D_x + b·D_y` from the first two generators of a Cartan distribution.
pub fn characteristic_field(ce: &Distribution, a: &Expr, b: &Expr) -> VectorField {
    ce.generators[0].scale(a).add(&ce.generators[1].scale(b))
}

fn direction_string(a: &Expr, b: &Expr) -> String {
    let term = |c: &Expr, v: &str| {
        if c.is_one() {
            v.to_string()
        } else {
            format!("({})*{}", c, v)
        }
    };
    match (a.is_zero(), b.is_zero()) {
        (true, _) => term(b, "D_y"),
        (_, true) => term(a, "D_x"),
        _ => format!("{} + {}", term(a, "D_x"), term(b, "D_y")),
    }
}

fn growth(v: &[usize]) -> String {
    let parts: Vec<String> = v.iter().map(|g| g.to_string()).collect();
    format!("({})", parts.join(","))
}

impl fmt::Display for ReductionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(s) = &self.system {
            writeln!(f, "system {} of type {}", s.name, s.type_string)?;
            writeln!(
                f,
                "  symbol g = {}  t = {}  kappa = {}  omega = {}",
                growth(&s.symbol.g_dims),
                s.symbol.t,
                s.symbol.kappa,
                s.symbol.omega
            )?;
            writeln!(
                f,
                "  equation dim {} (order {}), Cartan growth {}",
                s.equation_dim,
                s.order,
                growth(&s.cartan_growth)
            )?;
            writeln!(f, "  characteristic {}", s.characteristic)?;
            writeln!(f, "  Cauchy characteristic {}", s.cauchy_characteristic)?;
            writeln!(f, "  Cauchy field collinear with it: {}", s.collinear)?;
            writeln!(
                f,
                "  slice {} = {}, reduced dim {}",
                s.slice.coord, s.slice.value, s.mu
            )?;
        }
        let d = &self.distribution;
        writeln!(f, "distribution on ({}), dim {}", d.chart.join(", "), d.dim)?;
        for g in &d.generators {
            writeln!(f, "  {}", g)?;
        }
        writeln!(
            f,
            "weak growth {}  reduced {}",
            growth(&self.weak_flag.growth),
            growth(&self.weak_flag.reduced_growth)
        )?;
        writeln!(
            f,
            "strong growth {}  reduced {}",
            growth(&self.strong_flag.growth),
            growth(&self.strong_flag.reduced_growth)
        )?;
        writeln!(f, "first integrals {}", self.first_integrals)?;
        writeln!(f, "verdict {}", self.goursat)?;
        writeln!(f, "case {:?}", self.case)?;
        if !self.chain.is_empty() {
            writeln!(f, "chain ({})", self.route)?;
            for s in &self.chain {
                writeln!(
                    f,
                    "  {} [{}] -> dim {}, weak {}, strong {}",
                    s.operation,
                    s.detail,
                    s.dim,
                    growth(&s.weak_growth),
                    growth(&s.strong_growth)
                )?;
            }
        }
        for c in &self.checks {
            writeln!(
                f,
                "check {} {}: {}",
                c.kind,
                c.subject,
                if c.passed { "pass" } else { "fail" }
            )?;
        }
        match (&self.carnot, &self.carnot_note) {
            (Some(c), _) => {
                writeln!(f, "Carnot algebra dims {}", growth(&c.dims))?;
                for b in &c.brackets {
                    writeln!(f, "  [{}, {}] = {}", b.left, b.right, b.value)?;
                }
            }
            (None, Some(n)) => writeln!(f, "Carnot algebra: {}", n)?,
            (None, None) => {}
        }
        Ok(())
    }
}

/// Pins an `Arc<str>` keyed point from string pairs.
pub fn point_from_pairs(pairs: &[(String, Rational)]) -> Point {
    pairs
        .iter()
        .map(|(k, v)| (Arc::from(k.as_str()), v.clone()))
        .collect()
}
