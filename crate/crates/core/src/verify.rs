//! Numerical checks of the modulus-distortion inequalities, the finite mean
//! oscillation functional and equicontinuity probes.
//!
//! The left side of each inequality is a discrete modulus of a sampled
//! family. That is an estimate, not a bound for the full family, so a pass is
//! a failed attempt at falsification rather than a proof. Every report says so.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupPresentation;
use crate::maps::{inner_dilatation, jacobian, outer_dilatation, QuotientMap};
use crate::measure::{self, hyperbolic_density, SamplerSpec};
use crate::mobius::{self, hyp_dist, Point};
use crate::modulus::{
    discrete_modulus_report, is_admissible, AdmissibilityReport, DensityField, GridSpec, Metric, ModulusEstimate,
    PathFamily, TRANSPORT_GAP,
};
use crate::paths::{PathSpace, SampledPath};
use crate::quotient::{
    in_dirichlet_domain, min_displacement, normal_neighborhood, projected_pseudo_dist, quotient_dist, QuotientPoint,
    DEFAULT_MAX_WORD_LEN,
};
use crate::region::Region;
use crate::rng;

/// Relative accuracy of the discrete modulus on the annulus benchmark; every
/// inequality report carries at least this tolerance.
pub const DISCRETE_MODULUS_FLOOR: f64 = 0.02;

/// Tolerance floor for families or images not verified to lie in a normal
/// neighbourhood.
pub const HEURISTIC_CHART_FLOOR: f64 = 0.05;

pub const REPORT_NOTE: &str = "lhs is the discrete modulus of the sampled family on a grid; it estimates, and does \
     not bound, the modulus of the full family, so a pass fails to falsify the inequality rather than proving it";

fn default_tol() -> f64 {
    1e-3
}

fn default_word_len() -> usize {
    DEFAULT_MAX_WORD_LEN
}

fn default_admissibility_samples() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Grid of the discrete modulus; its metric is the metric of the whole check.
    pub grid: GridSpec,
    /// Monte Carlo sampler of the right side.
    #[serde(default)]
    pub sampler: SamplerSpec,
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_word_len")]
    pub max_word_len: usize,
    #[serde(default = "default_admissibility_samples")]
    pub admissibility_samples: usize,
    /// Centre of the chart the family must lie in; inferred from the family
    /// domain when absent.
    #[serde(default)]
    pub chart_center: Option<Vec<f64>>,
}

impl VerifyConfig {
    pub fn new(metric: Metric, seed: u64) -> Self {
        VerifyConfig {
            grid: GridSpec::new(metric),
            sampler: SamplerSpec::default(),
            seed,
            tol: default_tol(),
            max_word_len: default_word_len(),
            admissibility_samples: default_admissibility_samples(),
            chart_center: None,
        }
    }

    pub fn metric(&self) -> Metric {
        self.grid.metric
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Caveat {
    pub code: String,
    pub detail: String,
    /// Smallest tolerance a pass may be declared at with this caveat present.
    pub tol_floor: f64,
}

impl Caveat {
    fn new(code: &str, detail: impl Into<String>, tol_floor: f64) -> Self {
        Caveat { code: code.into(), detail: detail.into(), tol_floor }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fingerprint {
    pub map: String,
    pub density: String,
    pub family_paths: usize,
    pub family_domain: Option<Region>,
    pub m_tilde: usize,
    pub config: VerifyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub inequality: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub rhs_stderr: f64,
    /// Tolerance the pass was decided at: the declared one raised by caveats.
    pub tol: f64,
    pub declared_tol: f64,
    pub pass: bool,
    pub caveats: Vec<Caveat>,
    pub admissibility: AdmissibilityReport,
    pub lhs_modulus: ModulusEstimate,
    pub note: String,
    pub fingerprint: Fingerprint,
}

impl InequalityReport {
    #[allow(clippy::too_many_arguments)]
    fn decide(
        inequality: &str,
        lhs: ModulusEstimate,
        rhs: measure::Estimate,
        mut caveats: Vec<Caveat>,
        admissibility: AdmissibilityReport,
        fingerprint: Fingerprint,
    ) -> Self {
        if !lhs.converged {
            let gap = lhs.upper_bound / lhs.lower_bound - 1.0;
            caveats.push(Caveat::new(
                "modulus_not_converged",
                format!("iteration budget exhausted after {} iterations", lhs.iterations),
                gap,
            ));
        }
        caveats.push(Caveat::new(
            "discrete_modulus",
            format!(
                "{} paths on a {}-cell grid with {:?} element",
                lhs.paths,
                lhs.grid.grid.resolution.pow(lhs.grid.grid.dim() as u32),
                lhs.grid.metric
            ),
            DISCRETE_MODULUS_FLOOR,
        ));
        let mc = if rhs.estimate > 0.0 { 3.0 * rhs.stderr / rhs.estimate } else { 0.0 };
        caveats.push(Caveat::new(
            "monte_carlo",
            format!("{} samples in a ball of radius {}", rhs.samples, rhs.sampler_radius),
            mc,
        ));
        let declared = fingerprint.config.tol;
        let tol = declared.max(caveats.iter().map(|c| c.tol_floor).sum());
        let pass = lhs.estimate <= rhs.estimate * (1.0 + tol);
        InequalityReport {
            inequality: inequality.into(),
            lhs: lhs.estimate,
            rhs: rhs.estimate,
            slack: rhs.estimate - lhs.estimate,
            rhs_stderr: rhs.stderr,
            tol,
            declared_tol: declared,
            pass,
            caveats,
            admissibility,
            lhs_modulus: lhs,
            note: REPORT_NOTE.into(),
            fingerprint,
        }
    }
}

/// Image family `f(Γ)`: refined paths mapped pointwise, each image point
/// re-lifted next to its predecessor so image paths stay continuous in the ball.
pub fn image_family(f: &dyn QuotientMap, fam: &PathFamily, max_word_len: usize) -> Result<PathFamily> {
    let target = f.target().clone();
    let space = match fam.space() {
        PathSpace::Ball => PathSpace::Ball,
        PathSpace::Quotient(_) => PathSpace::Quotient(target.clone()),
    };
    let paths = fam
        .paths()
        .par_iter()
        .map(|p| {
            let r = p.refine(TRANSPORT_GAP);
            let mut pts: Vec<Point> = Vec::with_capacity(r.points().len());
            for z in r.points() {
                let mut y = f.apply_rep(z)?;
                if let Some(prev) = pts.last() {
                    if !target.is_trivial() && hyp_dist(&y, prev) > 0.5 {
                        y = projected_pseudo_dist(&y, prev, &target, max_word_len)?.lifted;
                    }
                }
                pts.push(y);
            }
            SampledPath::new(r.params().to_vec(), pts, space.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    let domain = fam.domain().and_then(|d| f.image_region(d));
    PathFamily::new(paths, domain, space)
}

fn inferred_center(fam: &PathFamily, cfg: &VerifyConfig) -> Vec<f64> {
    if let Some(c) = &cfg.chart_center {
        return c.clone();
    }
    match fam.domain() {
        Some(Region::HypAnnulus { center, .. })
        | Some(Region::HypBall { center, .. })
        | Some(Region::EuclideanAnnulus { center, .. })
        | Some(Region::EuclideanBall { center, .. }) => center.clone(),
        _ => {
            let (lo, hi) = fam.bounding_box();
            lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect()
        }
    }
}

/// Caveats for a family that may leave the normal neighbourhood at `center`.
fn chart_caveats(
    group: &std::sync::Arc<GroupPresentation>,
    center: &Point,
    fam: &PathFamily,
    which: &str,
    max_word_len: usize,
) -> Result<Vec<Caveat>> {
    if group.is_trivial() {
        return Ok(Vec::new());
    }
    let nbhd = normal_neighborhood(&QuotientPoint::new(center.clone(), group.clone())?, max_word_len)?;
    let mut out = Vec::new();
    if !nbhd.complete {
        out.push(Caveat::new("incomplete_word_search", format!("{which}: normal neighbourhood search hit the word budget"), 0.0));
    }
    let outside = fam.paths().iter().flat_map(|p| p.points()).filter(|z| !nbhd.contains(z)).count();
    if outside > 0 {
        out.push(Caveat::new(
            "outside_normal_neighborhood",
            format!("{which}: {outside} samples leave B_h({:?}, {:.6}); the ball modulus is heuristic there", center.coords(), nbhd.radius),
            HEURISTIC_CHART_FLOOR,
        ));
    }
    Ok(out)
}

fn element(metric: Metric, x: &[f64]) -> f64 {
    match metric {
        Metric::Euclidean => 1.0,
        Metric::Hyperbolic => hyperbolic_density(x),
    }
}

fn integration_radius(region: &Region, sampler: &SamplerSpec) -> Result<f64> {
    sampler.radius.or_else(|| region.euclidean_bound()).ok_or_else(|| {
        Error::InvalidParameter("integration region has no derivable bound; give the sampler radius".into())
    })
}

/// `M(f(Γ)) <= (1/m̃) ∫_D K_I(p, f) ρ^n dh̃`.
pub fn check_poletsky(
    f: &dyn QuotientMap,
    fam: &PathFamily,
    rho: &dyn DensityField,
    m_tilde: usize,
    cfg: &VerifyConfig,
) -> Result<InequalityReport> {
    if m_tilde == 0 {
        return Err(Error::InvalidParameter("m̃ must be at least 1".into()));
    }
    let metric = cfg.metric();
    let domain = fam.domain().ok_or_else(|| Error::InvalidParameter("the family needs a domain region".into()))?;
    let adm = is_admissible(rho, fam, cfg.admissibility_samples, metric, cfg.max_word_len)?;
    if !adm.pass {
        return Err(Error::InvalidParameter(format!(
            "density is not admissible: minimum line integral {} over {} paths",
            adm.min_integral, adm.checked
        )));
    }
    let center = Point::new(inferred_center(fam, cfg))?;
    let mut caveats = chart_caveats(f.source(), &center, fam, "family", cfg.max_word_len)?;
    let image = image_family(f, fam, cfg.max_word_len)?;
    if image.domain().is_none() {
        caveats.push(Caveat::new("image_domain_unknown", "cell volumes of the image grid are not clipped", 0.0));
    }
    let fc = f.apply_rep(&center)?;
    caveats.extend(chart_caveats(f.target(), &fc, &image, "image family", cfg.max_word_len)?);
    let lhs = discrete_modulus_report(&image, &cfg.grid)?;
    let n = fam.dim() as i32;
    let radius = integration_radius(domain, &cfg.sampler)?;
    let mut rhs = measure::integrate_ball(fam.dim(), radius, cfg.sampler.samples, cfg.seed, |x| {
        if !domain.contains(x) {
            return Ok(0.0);
        }
        let z = Point::from_image(x.to_vec());
        let r = rho.eval(&z)?;
        if r == 0.0 {
            return Ok(0.0);
        }
        let local = f.local(&z)?;
        let ki = inner_dilatation(&jacobian(local.as_ref(), x, None)?)
            .finite()
            .ok_or_else(|| Error::InvalidParameter(format!("infinite inner dilatation at {x:?}")))?;
        Ok(ki * r.powi(n) * element(metric, x))
    })?;
    rhs.estimate /= m_tilde as f64;
    rhs.stderr /= m_tilde as f64;
    let fingerprint = Fingerprint {
        map: f.describe(),
        density: rho.describe(),
        family_paths: fam.len(),
        family_domain: fam.domain().cloned(),
        m_tilde,
        config: cfg.clone(),
    };
    Ok(InequalityReport::decide("poletsky", lhs, rhs, caveats, adm, fingerprint))
}

/// `M(Γ) <= ∫_{f(D)} K_O(f^{-1}(p_*), f) ρ_*^n dh̃_*` for homeomorphisms.
pub fn check_inverse_inequality(
    f: &dyn QuotientMap,
    fam: &PathFamily,
    rho_star: &dyn DensityField,
    cfg: &VerifyConfig,
) -> Result<InequalityReport> {
    let metric = cfg.metric();
    let domain = fam.domain().ok_or_else(|| Error::InvalidParameter("the family needs a domain region".into()))?;
    let image = image_family(f, fam, cfg.max_word_len)?;
    let adm = is_admissible(rho_star, &image, cfg.admissibility_samples, metric, cfg.max_word_len)?;
    if !adm.pass {
        return Err(Error::InvalidParameter(format!(
            "density is not admissible for the image family: minimum line integral {}",
            adm.min_integral
        )));
    }
    let center = Point::new(inferred_center(fam, cfg))?;
    let mut caveats = chart_caveats(f.source(), &center, fam, "family", cfg.max_word_len)?;
    let fc = f.apply_rep(&center)?;
    caveats.extend(chart_caveats(f.target(), &fc, &image, "image family", cfg.max_word_len)?);
    let image_domain = match f.image_region(domain) {
        Some(r) => r,
        None => {
            caveats.push(Caveat::new(
                "image_domain_unknown",
                "right side integrated over a ball containing the image paths",
                0.0,
            ));
            let (lo, hi) = image.bounding_box();
            let r = lo.iter().chain(&hi).fold(0.0f64, |a, b| a.max(b.abs())) * (image.dim() as f64).sqrt();
            Region::EuclideanBall { center: vec![0.0; image.dim()], radius: r.min(1.0 - measure::MIN_MARGIN) }
        }
    };
    let lhs = discrete_modulus_report(fam, &cfg.grid)?;
    let n = fam.dim() as i32;
    let radius = integration_radius(&image_domain, &cfg.sampler)?;
    let rhs = measure::integrate_ball(fam.dim(), radius, cfg.sampler.samples, cfg.seed, |y| {
        if !image_domain.contains(y) {
            return Ok(0.0);
        }
        let yp = Point::from_image(y.to_vec());
        let r = rho_star.eval(&yp)?;
        if r == 0.0 {
            return Ok(0.0);
        }
        let x = f.inverse_rep(&yp).ok_or_else(|| Error::InvalidParameter("map has no inverse".into()))??;
        let local = f.local(&x)?;
        let ko = outer_dilatation(&jacobian(local.as_ref(), x.coords(), None)?)
            .finite()
            .ok_or_else(|| Error::InvalidParameter(format!("infinite outer dilatation at {:?}", x.coords())))?;
        Ok(ko * r.powi(n) * element(metric, y))
    })?;
    let fingerprint = Fingerprint {
        map: f.describe(),
        density: rho_star.describe(),
        family_paths: fam.len(),
        family_domain: fam.domain().cloned(),
        m_tilde: 1,
        config: cfg.clone(),
    };
    Ok(InequalityReport::decide("inverse", lhs, rhs, caveats, adm, fingerprint))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FmoLevel {
    pub eps: f64,
    /// Mean `Q̄_ε` over the quotient ball.
    pub mean: f64,
    /// Mean oscillation `⨍ |Q - Q̄_ε|`.
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FmoReport {
    pub levels: Vec<FmoLevel>,
    /// Largest value over the last (up to) four levels.
    pub tail_max: f64,
    /// Least-squares slope of the value per level over the tail, and its
    /// standard error from the Monte Carlo errors.
    pub trend_slope: f64,
    pub trend_stderr: f64,
    /// Slope above three standard errors and above 1% of the tail mean per level.
    pub increasing: bool,
    pub samples: usize,
    pub seed: u64,
}

/// Mean oscillation of `q` over `B̃(p0, ε)` for each `ε`, against the
/// quotient measure.
pub fn fmo_functional(
    q: &dyn DensityField,
    p0: &QuotientPoint,
    eps_list: &[f64],
    samples: usize,
    seed: u64,
    max_word_len: usize,
) -> Result<FmoReport> {
    let g = p0.group();
    let c = p0.rep();
    let dim = c.dim();
    let from_chart = mobius::translation_from_origin(c);
    let injectivity = if g.is_trivial() { f64::INFINITY } else { 0.5 * min_displacement(g, c, max_word_len)?.0 };
    let mut levels = Vec::with_capacity(eps_list.len());
    for (k, &eps) in eps_list.iter().enumerate() {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter("radii must be positive".into()));
        }
        let radius = mobius::euclidean_radius(eps);
        let level_seed = seed ^ ((k as u64 + 1) << 40);
        // weight of a chart sample: hyperbolic density, restricted to the
        // Dirichlet domain once the ball may overlap its translates
        let weight = |x: &[f64]| -> Result<(f64, Point)> {
            let z = Point::from_image(from_chart.apply_coords(x));
            if eps > injectivity && !in_dirichlet_domain(g, c, &z, max_word_len)?.inside {
                return Ok((0.0, z));
            }
            Ok((hyperbolic_density(x), z))
        };
        let vol = measure::integrate_ball(dim, radius, samples, level_seed, |x| Ok(weight(x)?.0))?;
        let int_q = measure::integrate_ball(dim, radius, samples, level_seed, |x| {
            let (w, z) = weight(x)?;
            Ok(if w == 0.0 { 0.0 } else { w * q.eval(&z)? })
        })?;
        let mean = int_q.estimate / vol.estimate;
        let osc = measure::integrate_ball(dim, radius, samples, level_seed, |x| {
            let (w, z) = weight(x)?;
            Ok(if w == 0.0 { 0.0 } else { w * (q.eval(&z)? - mean).abs() })
        })?;
        levels.push(FmoLevel { eps, mean, value: osc.estimate / vol.estimate, stderr: osc.stderr / vol.estimate });
    }
    let tail = &levels[levels.len().saturating_sub(4)..];
    let tail_max = tail.iter().map(|l| l.value).fold(f64::NEG_INFINITY, f64::max);
    let (slope, se) = if tail.len() >= 2 {
        let m = tail.len() as f64;
        let ibar = (m - 1.0) / 2.0;
        let sxx: f64 = (0..tail.len()).map(|i| (i as f64 - ibar).powi(2)).sum();
        let vbar = tail.iter().map(|l| l.value).sum::<f64>() / m;
        let slope = tail.iter().enumerate().map(|(i, l)| (i as f64 - ibar) * (l.value - vbar)).sum::<f64>() / sxx;
        let var = tail.iter().enumerate().map(|(i, l)| (i as f64 - ibar).powi(2) * l.stderr.powi(2)).sum::<f64>() / (sxx * sxx);
        (slope, var.sqrt())
    } else {
        (0.0, 0.0)
    };
    let tail_mean = tail.iter().map(|l| l.value).sum::<f64>() / tail.len().max(1) as f64;
    Ok(FmoReport {
        tail_max,
        trend_slope: slope,
        trend_stderr: se,
        increasing: slope > 3.0 * se && slope > 0.01 * tail_mean.abs(),
        levels,
        samples,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquicontinuityRow {
    pub radius: f64,
    pub sup: f64,
    /// `ω_f(r)` per map, in input order.
    pub per_map: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquicontinuityTable {
    pub rows: Vec<EquicontinuityRow>,
    /// `sup_f ω_f` strictly decreases along the (decreasing) radii.
    pub decreasing: bool,
    pub samples: usize,
    pub seed: u64,
}

/// `ω_f(r) = max h̃_*(f(p), f(p0))` over sampled `p` with `h̃(p, p0) < r`.
/// A quarter of the samples sit just inside the sphere of radius `r`.
pub fn equicontinuity_probe(
    maps: &[&dyn QuotientMap],
    p0: &QuotientPoint,
    radii: &[f64],
    samples: usize,
    seed: u64,
    max_word_len: usize,
) -> Result<EquicontinuityTable> {
    let Some(first) = maps.first() else {
        return Err(Error::InvalidParameter("no maps given".into()));
    };
    if maps.iter().any(|f| !std::sync::Arc::ptr_eq(f.source(), first.source()) || f.target().dim() != first.target().dim()) {
        return Err(Error::GroupMismatch);
    }
    let c = p0.rep();
    let from_chart = mobius::translation_from_origin(c);
    let images: Vec<QuotientPoint> = maps.iter().map(|f| f.apply(p0)).collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(radii.len());
    for (k, &r) in radii.iter().enumerate() {
        let mut rg = rng::stream(seed, k as u64);
        let shell = mobius::euclidean_radius(r * (1.0 - 1e-6));
        let pts: Vec<Point> = (0..samples)
            .map(|i| {
                let x = if i % 4 == 0 {
                    rng::unit_vector(&mut rg, c.dim()).into_iter().map(|u| u * shell).collect()
                } else {
                    rng::uniform_in_ball(&mut rg, c.dim(), shell)
                };
                Point::from_image(from_chart.apply_coords(&x))
            })
            .collect();
        let per_map = maps
            .iter()
            .zip(&images)
            .map(|(f, fp0)| {
                let vals = pts
                    .par_iter()
                    .map(|z| {
                        let fz = QuotientPoint::new(f.apply_rep(z)?, f.target().clone())?;
                        Ok(quotient_dist(&fz, fp0, max_word_len)?.value)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Ok(vals.into_iter().fold(0.0, f64::max))
            })
            .collect::<Result<Vec<f64>>>()?;
        let sup = per_map.iter().copied().fold(0.0, f64::max);
        rows.push(EquicontinuityRow { radius: r, sup, per_map });
    }
    let decreasing = rows.windows(2).all(|w| w[1].sup < w[0].sup);
    Ok(EquicontinuityTable { rows, decreasing, samples, seed })
}

/// `eps_max 2^{-k}` for `k = 0..levels`.
pub fn dyadic(eps_max: f64, levels: usize) -> Vec<f64> {
    (0..levels).map(|k| eps_max * 0.5f64.powi(k as i32)).collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::group::{make_cyclic_translation, GroupPresentation};
    use crate::maps::{build_fm_family, ChartLinearMap, IdentityQuotientMap, MobiusQuotientMap};
    use crate::modulus::{AnnulusExtremal, ConstantDensity, Eta, FamilySpec, FnDensity, RingTestDensity};

    fn cyclic() -> Arc<GroupPresentation> {
        Arc::new(make_cyclic_translation(2, 1.0).unwrap())
    }

    fn ring_family(g: &Arc<GroupPresentation>, inner: f64, outer: f64, paths: usize) -> PathFamily {
        FamilySpec::Annulus { center: vec![0.0, 0.0], inner, outer, paths, slants: vec![], samples: 2 }
            .build(PathSpace::Quotient(g.clone()))
            .unwrap()
    }

    fn config(metric: Metric) -> VerifyConfig {
        let mut c = VerifyConfig::new(metric, 11);
        c.sampler = SamplerSpec::with_samples(50_000);
        c
    }

    #[test]
    fn identity_equality_case() {
        let g = cyclic();
        let fam = ring_family(&g, 0.1, 0.2, 1024);
        let rho = AnnulusExtremal { center: vec![0.0, 0.0], inner: 0.1, outer: 0.2, metric: Metric::Hyperbolic };
        let f = IdentityQuotientMap::new(g.clone());
        let rep = check_poletsky(&f, &fam, &rho, 1, &config(Metric::Hyperbolic)).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!((rep.lhs - rep.rhs).abs() / rep.rhs < 0.05, "{} vs {}", rep.lhs, rep.rhs);
        assert!(rep.caveats.iter().all(|c| c.code != "outside_normal_neighborhood"), "{:?}", rep.caveats);
        let inv = check_inverse_inequality(&f, &fam, &rho, &config(Metric::Hyperbolic)).unwrap();
        assert!(inv.pass && (inv.lhs - inv.rhs).abs() / inv.rhs < 0.05);
    }

    #[test]
    fn moebius_equality_case() {
        let g = cyclic();
        let fam = ring_family(&g, 0.1, 0.2, 1024);
        let rho = AnnulusExtremal { center: vec![0.0, 0.0], inner: 0.1, outer: 0.2, metric: Metric::Hyperbolic };
        let f = MobiusQuotientMap::new(g.clone(), mobius::translation_from_origin(&Point::on_axis(2, 0.1))).unwrap();
        let rep = check_poletsky(&f, &fam, &rho, 1, &config(Metric::Hyperbolic)).unwrap();
        assert!(rep.pass && (rep.lhs - rep.rhs).abs() / rep.rhs < 0.05, "{} vs {}", rep.lhs, rep.rhs);
    }

    #[test]
    fn fm_passes_with_positive_slack() {
        let g = cyclic();
        let p0 = QuotientPoint::new(Point::origin(2), g.clone()).unwrap();
        let fam = FamilySpec::HypAnnulus { center: vec![0.0, 0.0], inner: 0.1, outer: 0.38, paths: 1024, samples: 2 }
            .build(PathSpace::Quotient(g.clone()))
            .unwrap();
        let rho = RingTestDensity::new(p0.clone(), 0.1, 0.38, Eta::Log, 12).unwrap();
        let f = build_fm_family(&p0, 0.4, 2.0, 4, 12).unwrap();
        let rep = check_poletsky(&f, &fam, &rho, 1, &config(Metric::Hyperbolic)).unwrap();
        assert!(rep.pass && rep.slack > 0.0, "{rep:?}");
        // the inverse inequality, with the ring test density pushed to the image
        let img = image_family(&f, &fam, 12).unwrap();
        let (a, b) = match img.domain().unwrap() {
            Region::HypAnnulus { inner, outer, .. } => (*inner, *outer),
            other => panic!("{other:?}"),
        };
        let star = RingTestDensity::new(p0, a, b, Eta::Log, 12).unwrap();
        let inv = check_inverse_inequality(&f, &fam, &star, &config(Metric::Hyperbolic)).unwrap();
        assert!(inv.pass, "{inv:?}");
        assert!(inv.caveats.iter().any(|c| c.code == "monte_carlo"));
    }

    #[test]
    fn linear_chart_map_on_a_box() {
        let g = Arc::new(GroupPresentation::trivial(2).unwrap());
        let (w, h) = (0.2, 0.1);
        let fam = FamilySpec::Parallel { lo: vec![-w / 2.0, -h / 2.0], hi: vec![w / 2.0, h / 2.0], axis: 0, paths: 64, samples: 2 }
            .build(PathSpace::Ball)
            .unwrap();
        let f = ChartLinearMap::new(g, Point::origin(2), nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 1.0])))
            .unwrap();
        // ρ_* = 1/(2w) on the stretched box; K_O = 2, so the right side is 2 (2w h) / (2w)^2 = h/w
        let img = f.image_region(fam.domain().unwrap()).unwrap();
        let rho_star = FnDensity::new(move |x: &Point| if img.contains(x.coords()) { 1.0 / (2.0 * w) } else { 0.0 });
        let mut cfg = config(Metric::Euclidean);
        cfg.grid = cfg.grid.with_resolution(16);
        let rep = check_inverse_inequality(&f, &fam, &rho_star, &cfg).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!((rep.rhs - h / w).abs() < 4.0 * rep.rhs_stderr + 1e-3, "{}", rep.rhs);
        assert!((rep.lhs - h / w).abs() < 0.02 * h / w, "{}", rep.lhs);
    }

    #[test]
    fn inadmissible_density_is_rejected() {
        let g = cyclic();
        let fam = ring_family(&g, 0.1, 0.2, 64);
        let f = IdentityQuotientMap::new(g);
        assert!(check_poletsky(&f, &fam, &ConstantDensity(0.0), 1, &config(Metric::Hyperbolic)).is_err());
    }

    #[test]
    fn reports_are_reproducible_and_serializable() {
        let g = cyclic();
        let fam = ring_family(&g, 0.1, 0.2, 256);
        let rho = AnnulusExtremal { center: vec![0.0, 0.0], inner: 0.1, outer: 0.2, metric: Metric::Hyperbolic };
        let f = IdentityQuotientMap::new(g);
        let mut cfg = config(Metric::Hyperbolic);
        cfg.grid = cfg.grid.with_resolution(32);
        let a = serde_json::to_string(&check_poletsky(&f, &fam, &rho, 1, &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&check_poletsky(&f, &fam, &rho, 1, &cfg).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"fingerprint\""));
    }

    #[test]
    fn tolerance_floor_follows_caveats() {
        let g = cyclic();
        // a ring wider than the normal neighbourhood
        let fam = ring_family(&g, 0.1, 0.3, 128);
        let rho = AnnulusExtremal { center: vec![0.0, 0.0], inner: 0.1, outer: 0.3, metric: Metric::Hyperbolic };
        let f = IdentityQuotientMap::new(g);
        let mut cfg = config(Metric::Hyperbolic);
        cfg.grid = cfg.grid.with_resolution(32);
        let rep = check_poletsky(&f, &fam, &rho, 1, &cfg).unwrap();
        assert!(rep.caveats.iter().any(|c| c.code == "outside_normal_neighborhood"));
        let floors: f64 = rep.caveats.iter().map(|c| c.tol_floor).sum();
        assert!(rep.tol >= floors && rep.tol >= rep.declared_tol);
        assert_eq!(rep.pass, rep.lhs <= rep.rhs * (1.0 + rep.tol));
    }

    #[test]
    fn fmo_examples() {
        let g = cyclic();
        let p0 = QuotientPoint::new(Point::origin(2), g).unwrap();
        let eps = dyadic(0.4, 8);
        let c = fmo_functional(&ConstantDensity(2.0), &p0, &eps, 20_000, 3, 12).unwrap();
        assert!(c.levels.iter().all(|l| l.value <= 3.0 * l.stderr + 1e-12));
        let log = FnDensity::new(|x: &Point| (std::f64::consts::E / x.norm()).ln());
        let r = fmo_functional(&log, &p0, &eps, 20_000, 3, 12).unwrap();
        assert!(!r.increasing, "{r:?}");
        // small balls see the scale-invariant oscillation 1/e of log|x| in the plane
        let last = r.levels.last().unwrap();
        assert!((last.value - 1.0 / std::f64::consts::E).abs() < 4.0 * last.stderr + 5e-3, "{last:?}");
        let inv = FnDensity::new(|x: &Point| 1.0 / x.norm());
        let r = fmo_functional(&inv, &p0, &eps, 20_000, 3, 12).unwrap();
        assert!(r.levels.windows(2).all(|w| w[1].value > w[0].value), "{r:?}");
        assert!(r.increasing);
    }

    #[test]
    fn fmo_uses_the_dirichlet_domain_for_large_balls() {
        let g = cyclic();
        let p0 = QuotientPoint::new(Point::origin(2), g).unwrap();
        // B̃(p0, 2) wraps around the quotient; its area is that of the
        // Dirichlet domain slab clipped to the ball
        let r = fmo_functional(&ConstantDensity(1.0), &p0, &[2.0], 20_000, 4, 12).unwrap();
        assert!(r.levels[0].value.abs() < 1e-12 && (r.levels[0].mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equicontinuity_examples() {
        let g = cyclic();
        let p0 = QuotientPoint::new(Point::origin(2), g.clone()).unwrap();
        let radii = dyadic(0.3, 5);
        let id = IdentityQuotientMap::new(g.clone());
        let rot = MobiusQuotientMap::new(g.clone(), crate::mobius::MobiusMap::reflection(&[0.0, 1.0]).unwrap()).unwrap();
        let t = equicontinuity_probe(&[&id, &rot], &p0, &radii, 400, 5, 12).unwrap();
        for row in &t.rows {
            assert!((row.sup - row.radius).abs() < 1e-5 * row.radius, "{row:?}");
        }
        let fms: Vec<_> = (1..=50).map(|m| build_fm_family(&p0, 0.4, 2.0, m, 12).unwrap()).collect();
        let refs: Vec<&dyn QuotientMap> = fms.iter().map(|f| f as &dyn QuotientMap).collect();
        let t = equicontinuity_probe(&refs, &p0, &radii, 200, 5, 12).unwrap();
        assert!(t.decreasing && t.rows[4].sup < 0.5 * t.rows[0].sup, "{t:?}");

        struct Jump(Arc<GroupPresentation>);
        impl QuotientMap for Jump {
            fn source(&self) -> &Arc<GroupPresentation> {
                &self.0
            }
            fn target(&self) -> &Arc<GroupPresentation> {
                &self.0
            }
            fn apply_rep(&self, z: &Point) -> Result<Point> {
                Ok(if z.norm() == 0.0 { z.clone() } else { Point::new(vec![0.0, 0.3])? })
            }
            fn local(&self, _: &Point) -> Result<Box<dyn crate::maps::SmoothMap + '_>> {
                Err(Error::InvalidParameter("not smooth".into()))
            }
            fn describe(&self) -> String {
                "jump".into()
            }
        }
        let j = Jump(g);
        let t = equicontinuity_probe(&[&j], &p0, &radii, 50, 5, 12).unwrap();
        let floor = mobius::hyp_dist_coords(&[0.0, 0.0], &[0.0, 0.3]);
        assert!(t.rows.iter().all(|r| (r.sup - floor).abs() < 1e-12));
    }
}
