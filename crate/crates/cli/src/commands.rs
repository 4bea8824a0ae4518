//! One function per command; each returns a JSON result plus plot tables.

use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use factorspace::group::GroupPresentation;
use factorspace::maps::{build_fm_family, dilatations, Dilatations, QuotientMap, RadialExample};
use factorspace::measure::{hyp_measure, hyperbolic_ball_volume, quotient_measure};
use factorspace::mobius::{hyp_dist, Point};
use factorspace::modulus::discrete_modulus_report;
use factorspace::paths::PathSpace;
use factorspace::quotient::{dirichlet_reduce, in_dirichlet_domain, min_displacement, projected_pseudo_dist, QuotientPoint};
use factorspace::region::Region;
use factorspace::specs::{MapSpec, PointSpec};
use factorspace::verify::{
    check_inverse_inequality, check_poletsky, dyadic, equicontinuity_probe, fmo_functional, InequalityReport,
};
use factorspace::{rng, ExtReal};

use crate::config::{
    Command, Config, ConfigError, Dilatation, Dirichlet, Distance, Equicontinuity, Fmo, Measure, Modulus, Orbit, Verify,
};
use crate::RunError;

/// Plot-ready table written as `<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub result: Value,
    pub tables: Vec<Table>,
    /// False when an inequality or bound check failed.
    pub pass: bool,
    /// Budget and convergence caveats; failures under `--strict`.
    pub budget_caveats: Vec<String>,
}

impl Outcome {
    fn new(result: impl Serialize) -> Result<Self, RunError> {
        Ok(Outcome {
            result: serde_json::to_value(result).map_err(|e| RunError::Engine(e.to_string()))?,
            tables: Vec::new(),
            pass: true,
            budget_caveats: Vec::new(),
        })
    }

    fn caveat_if(&mut self, cond: bool, msg: &str) {
        if cond {
            self.budget_caveats.push(msg.into());
        }
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn ext(x: ExtReal) -> String {
    match x.finite() {
        Some(v) => num(v),
        None => "inf".into(),
    }
}

fn word(w: &[i32]) -> String {
    w.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ")
}

fn points(specs: &[PointSpec], dim: usize) -> Result<Vec<Point>, RunError> {
    specs.iter().map(|p| p.build(dim).map_err(RunError::from)).collect()
}

fn point_or_origin(p: &Option<PointSpec>, dim: usize) -> Result<Point, RunError> {
    Ok(match p {
        Some(p) => p.build(dim)?,
        None => Point::origin(dim),
    })
}

pub fn dispatch(cfg: &Config) -> Result<Outcome, RunError> {
    let seed = cfg.seed.unwrap_or(0);
    match &cfg.body {
        Command::Distance(c) => distance(c),
        Command::Orbit(c) => orbit(c),
        Command::Dirichlet(c) => dirichlet(c),
        Command::Measure(c) => measure(c, seed),
        Command::Modulus(c) => modulus(c),
        Command::Dilatation(c) => dilatation(c, seed),
        Command::VerifyPoletsky(c) => verify(c, true),
        Command::VerifyInverse(c) => verify(c, false),
        Command::Fmo(c) => fmo(c, seed),
        Command::Equicontinuity(c) => equicontinuity(c, seed),
    }
}

fn distance(c: &Distance) -> Result<Outcome, RunError> {
    let g = c.group.build()?;
    let p = points(&c.points, g.dim())?;
    let d = projected_pseudo_dist(&p[0], &p[1], &g, c.max_word_len)?;
    let mut out = Outcome::new(json!({
        "distance": d.value,
        "hyperbolic": hyp_dist(&p[0], &p[1]),
        "word": d.word,
        "lifted": d.lifted,
        "complete": d.complete,
    }))?;
    out.caveat_if(!d.complete, "word search incomplete: distance is an upper bound");
    Ok(out)
}

fn orbit(c: &Orbit) -> Result<Outcome, RunError> {
    let g = c.group.build()?;
    let seed = c.seed_point.build(g.dim())?;
    let center = c.center.build(g.dim())?;
    let o = g.orbit_in_ball(&seed, &center, c.radius, c.max_word_len)?;
    let mut t = Table::new("orbit", &["word", "distance", "displacement"]);
    t.header.extend((0..g.dim()).map(|i| format!("x{i}")));
    for p in &o.points {
        let mut row = vec![word(&p.word), num(p.distance), num(p.displacement)];
        row.extend(p.point.coords().iter().map(|&x| num(x)));
        t.push(row);
    }
    let mut out = Outcome::new(json!({"count": o.points.len(), "search": o}))?;
    out.caveat_if(!o.complete, "orbit search hit the word budget");
    out.tables.push(t);
    Ok(out)
}

fn dirichlet(c: &Dirichlet) -> Result<Outcome, RunError> {
    let g = c.group.build()?;
    let p0 = c.p0.build(g.dim())?;
    let (disp, disp_complete) = min_displacement(&g, &p0, c.max_word_len)?;
    let mut rows = Vec::new();
    let mut t = Table::new("dirichlet", &["index", "inside", "boundary", "distance"]);
    let mut complete = disp_complete;
    for (i, z) in points(&c.points, g.dim())?.iter().enumerate() {
        let m = in_dirichlet_domain(&g, &p0, z, c.max_word_len)?;
        let r = dirichlet_reduce(&g, &p0, z, c.max_word_len)?;
        complete &= m.complete && r.complete;
        t.push(vec![i.to_string(), m.inside.to_string(), m.boundary.to_string(), num(r.value)]);
        rows.push(json!({"point": z, "membership": m, "reduced": r}));
    }
    let mut out = Outcome::new(json!({
        "min_displacement": ExtReal::from_f64(disp),
        "injectivity_radius": ExtReal::from_f64(0.5 * disp),
        "points": rows,
    }))?;
    out.caveat_if(!complete, "word search incomplete");
    out.tables.push(t);
    Ok(out)
}

fn measure(c: &Measure, seed: u64) -> Result<Outcome, RunError> {
    let group = c.group.as_ref().map(|g| g.build()).transpose()?;
    let dim = c.dimension.or(group.as_ref().map(|g| g.dim())).unwrap_or(2);
    if let Some(region) = &c.region {
        let est = hyp_measure(region, dim, c.sampler, seed)?;
        let reference = match region {
            Region::HypBall { radius, .. } => Some(hyperbolic_ball_volume(dim, *radius)),
            _ => None,
        };
        return Outcome::new(json!({"measure": est, "reference": reference}));
    }
    let g = group.expect("validated");
    let set = c.set.as_ref().expect("validated");
    let p0 = point_or_origin(&c.p0, dim)?;
    let est = quotient_measure(&g, &p0, set, c.sampler, c.max_word_len, seed)?;
    Outcome::new(json!({"measure": est}))
}

fn modulus(c: &Modulus) -> Result<Outcome, RunError> {
    let space = match &c.group {
        Some(g) => PathSpace::Quotient(g.build()?),
        None => PathSpace::Ball,
    };
    let fam = c.family.build(space)?;
    let est = discrete_modulus_report(&fam, &c.grid)?;
    let mut t = Table::new("residuals", &["step", "gap"]);
    for (i, r) in est.residuals.iter().enumerate() {
        t.push(vec![i.to_string(), num(*r)]);
    }
    let rel = c.reference.map(|r| (est.estimate - r) / r);
    let converged = est.converged;
    let mut out = Outcome::new(json!({"modulus": est, "reference": c.reference, "relative_error": rel}))?;
    out.caveat_if(!converged, "modulus optimizer hit the iteration budget");
    out.tables.push(t);
    Ok(out)
}

#[derive(Serialize)]
struct DilatationRow {
    point: Vec<f64>,
    #[serde(flatten)]
    d: Dilatations,
    /// Closed-form bound on the inner dilatation, when the map has one.
    bound: Option<f64>,
}

fn dilatation(c: &Dilatation, seed: u64) -> Result<Outcome, RunError> {
    let group = c.group.as_ref().map(|g| g.build()).transpose()?;
    let dim = c.dimension.or(group.as_ref().map(|g| g.dim())).unwrap_or(2);
    let mut xs = points(&c.points, dim)?;
    if c.samples > 0 {
        let radius = c.sample_radius.unwrap_or(0.99);
        let mut r = rng::stream(seed, 0);
        for _ in 0..c.samples {
            xs.push(Point::new(rng::uniform_in_ball(&mut r, dim, radius))?);
        }
    }
    let mut rows = Vec::with_capacity(xs.len());
    let smooth = match (&c.map, &group) {
        (MapSpec::FmFamily { .. } | MapSpec::ChartLinear { .. }, _) => None,
        (spec, None) => spec.build_smooth(dim)?,
        (MapSpec::RadialExample { .. }, Some(_)) => c.map.build_smooth(dim)?,
        _ => None,
    };
    if let Some(f) = smooth {
        let radial = match &c.map {
            MapSpec::RadialExample { alpha, m } => Some(RadialExample::new(dim, *alpha, *m)?),
            _ => None,
        };
        for x in &xs {
            let d = dilatations(f.as_ref(), x.coords())?;
            let bound = radial.as_ref().map(|h| h.inner_dilatation_bound(x.coords()));
            rows.push(DilatationRow { point: x.coords().to_vec(), d, bound });
        }
    } else {
        let g = group.ok_or_else(|| ConfigError::new("field `group`: required for quotient maps"))?;
        let f = c.map.build_quotient(&g, c.max_word_len)?;
        let fm = match &c.map {
            MapSpec::FmFamily { p0, r0, alpha, m } => {
                Some(build_fm_family(&QuotientPoint::new(p0.build(dim)?, g.clone())?, *r0, *alpha, *m, c.max_word_len)?)
            }
            _ => None,
        };
        for x in &xs {
            let local = f.local(x)?;
            let d = dilatations(local.as_ref(), x.coords())?;
            let bound = fm.as_ref().map(|fm| {
                let y = fm.chart_coords(x);
                if y.iter().map(|v| v * v).sum::<f64>().sqrt() < fm.radial().scale() {
                    fm.radial().inner_dilatation_bound(&y)
                } else {
                    1.0
                }
            });
            rows.push(DilatationRow { point: x.coords().to_vec(), d, bound });
        }
    }
    let mut t = Table::new("dilatation", &["k_inner", "k_outer", "jacobian_det", "bound"]);
    t.header.extend((0..dim).map(|i| format!("x{i}")));
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for r in &rows {
        if let (Some(k), Some(b)) = (r.d.inner.finite(), r.bound) {
            max_ratio = max_ratio.max(k / b);
            if k > b * (1.0 + 1e-3) {
                violations += 1;
            }
        }
        let mut row = vec![ext(r.d.inner), ext(r.d.outer), num(r.d.jacobian_det), r.bound.map_or(String::new(), num)];
        row.extend(r.point.iter().map(|&x| num(x)));
        t.push(row);
    }
    let max_inner = ExtReal::from_f64(rows.iter().map(|r| r.d.inner.to_f64()).fold(1.0, f64::max));
    let mut out = Outcome::new(json!({
        "count": rows.len(),
        "max_inner": max_inner,
        "max_bound_ratio": rows.iter().any(|r| r.bound.is_some()).then_some(max_ratio),
        "bound_violations": violations,
        "points": rows,
    }))?;
    out.pass = violations == 0;
    out.tables.push(t);
    Ok(out)
}

const BUDGET_CAVEATS: [&str; 4] =
    ["modulus_not_converged", "incomplete_word_search", "outside_normal_neighborhood", "image_domain_unknown"];

fn verify(c: &Verify, poletsky: bool) -> Result<Outcome, RunError> {
    let g = c.group.build()?;
    let words = c.verify.max_word_len;
    let f = c.map.build_quotient(&g, words)?;
    let fam = c.family.build(PathSpace::Quotient(g.clone()))?;
    let rho = c.density.build(&g, words)?;
    let rep: InequalityReport = if poletsky {
        check_poletsky(f.as_ref(), &fam, rho.as_ref(), c.m_tilde, &c.verify)?
    } else {
        if c.m_tilde != 1 {
            return Err(ConfigError::new("field `m_tilde`: the inverse inequality takes no multiplicity").into());
        }
        check_inverse_inequality(f.as_ref(), &fam, rho.as_ref(), &c.verify)?
    };
    let budget: Vec<String> = rep
        .caveats
        .iter()
        .filter(|cv| BUDGET_CAVEATS.contains(&cv.code.as_str()))
        .map(|cv| format!("{}: {}", cv.code, cv.detail))
        .collect();
    let mut t = Table::new("residuals", &["step", "gap"]);
    for (i, r) in rep.lhs_modulus.residuals.iter().enumerate() {
        t.push(vec![i.to_string(), num(*r)]);
    }
    let pass = rep.pass;
    let mut out = Outcome::new(rep)?;
    out.pass = pass;
    out.budget_caveats = budget;
    out.tables.push(t);
    Ok(out)
}

fn group_point(g: &Arc<GroupPresentation>, p: &Option<PointSpec>) -> Result<QuotientPoint, RunError> {
    Ok(QuotientPoint::new(point_or_origin(p, g.dim())?, g.clone())?)
}

fn fmo(c: &Fmo, seed: u64) -> Result<Outcome, RunError> {
    let g = c.group.build()?;
    let p0 = group_point(&g, &c.p0)?;
    let q = c.q.build(&g, c.max_word_len)?;
    let eps = c.eps.clone().unwrap_or_else(|| dyadic(c.eps_max, c.levels));
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ConfigError::new("field `eps`: radii must decrease").into());
    }
    let rep = fmo_functional(q.as_ref(), &p0, &eps, c.samples, seed, c.max_word_len)?;
    let mut t = Table::new("fmo", &["eps", "value", "stderr", "mean"]);
    for l in &rep.levels {
        t.push(vec![num(l.eps), num(l.value), num(l.stderr), num(l.mean)]);
    }
    let mut out = Outcome::new(json!({"Q": q.describe(), "bounded": !rep.increasing, "fmo": rep}))?;
    out.tables.push(t);
    Ok(out)
}

fn equicontinuity(c: &Equicontinuity, seed: u64) -> Result<Outcome, RunError> {
    let g = c.group.build()?;
    let p0 = group_point(&g, &c.p0)?;
    let mut specs = Vec::new();
    for spec in &c.maps {
        match c.m_range {
            Some([a, b]) => {
                if a == 0 || a > b {
                    return Err(ConfigError::new("field `m_range`: need 1 <= from <= to").into());
                }
                for m in a..=b {
                    specs.push(spec.with_m(m)?);
                }
            }
            None => specs.push(spec.clone()),
        }
    }
    let maps: Vec<Box<dyn QuotientMap>> =
        specs.iter().map(|s| s.build_quotient(&g, c.max_word_len)).collect::<factorspace::Result<_>>()?;
    let refs: Vec<&dyn QuotientMap> = maps.iter().map(|m| m.as_ref()).collect();
    let radii = c.radii.clone().unwrap_or_else(|| dyadic(c.r_max, c.levels));
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ConfigError::new("field `radii`: radii must decrease").into());
    }
    let table = equicontinuity_probe(&refs, &p0, &radii, c.samples, seed, c.max_word_len)?;
    let mut t = Table::new("equicontinuity", &["radius", "sup"]);
    for r in &table.rows {
        t.push(vec![num(r.radius), num(r.sup)]);
    }
    let mut out = Outcome::new(json!({"maps": specs.len(), "table": table}))?;
    out.tables.push(t);
    Ok(out)
}

