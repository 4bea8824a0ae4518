//! Moduli of path families: admissibility, upper bounds from test densities,
//! discrete extremal length and the spherical-ring reference value.

mod density;
mod discrete;
mod family;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use density::{
    to_metric, AnnulusExtremal, ConstantDensity, DensityField, Eta, FnDensity, GridDensity, RingTestDensity,
};
pub use discrete::{discrete_modulus, discrete_modulus_report, GridBox, GridReport, GridSpec, ModulusEstimate};
pub use family::{directions, FamilySpec, PathFamily, TRANSPORT_GAP};

use crate::error::{Error, Result};
use crate::group::GroupPresentation;
use crate::measure::{self, hyperbolic_density, Estimate, SamplerSpec};
use crate::mobius::Point;
use crate::quotient::in_dirichlet_domain;
use crate::region::{QuotientSet, Region};

/// Volume and length element of a computation in the ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    Hyperbolic,
}

/// Line integrals below this count as failures.
pub const ADMISSIBILITY_THRESHOLD: f64 = 1.0 - 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub min_integral: f64,
    /// Index in the family of the path attaining the minimum.
    pub argmin: usize,
    pub mean_integral: f64,
    pub checked: usize,
    pub threshold: f64,
    pub pass: bool,
}

struct InMetric<'a> {
    rho: &'a dyn DensityField,
    metric: Metric,
}

impl DensityField for InMetric<'_> {
    fn eval(&self, x: &Point) -> Result<f64> {
        let v = self.rho.eval(x)?;
        Ok(match self.metric {
            Metric::Hyperbolic => v,
            // ρ ds_E = (ρ / λ) ds_h
            Metric::Euclidean => to_metric(v, x.coords(), Metric::Hyperbolic),
        })
    }
}

/// Line integrals of `rho` over up to `sample_count` evenly spread paths.
/// Euclidean densities are integrated against Euclidean arc length.
pub fn is_admissible(
    rho: &dyn DensityField,
    fam: &PathFamily,
    sample_count: usize,
    metric: Metric,
    max_word_len: usize,
) -> Result<AdmissibilityReport> {
    let step = fam.len().div_ceil(sample_count.max(1)).max(1);
    let chosen: Vec<usize> = (0..fam.len()).step_by(step).collect();
    let field = InMetric { rho, metric };
    let values = chosen
        .par_iter()
        .map(|&i| fam.paths()[i].line_integral(&field, max_word_len))
        .collect::<Result<Vec<f64>>>()?;
    let (k, min) = values.iter().copied().enumerate().fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    Ok(AdmissibilityReport {
        min_integral: min,
        argmin: chosen[k],
        mean_integral: values.iter().sum::<f64>() / values.len() as f64,
        checked: values.len(),
        threshold: ADMISSIBILITY_THRESHOLD,
        pass: min >= ADMISSIBILITY_THRESHOLD,
    })
}

/// Monte Carlo `∫_D ρ^n` against the chosen volume element.
pub fn modulus_upper_bound(
    rho: &dyn DensityField,
    domain: &Region,
    dim: usize,
    metric: Metric,
    sampler: SamplerSpec,
    seed: u64,
) -> Result<Estimate> {
    if let Region::Empty = domain {
        return Ok(Estimate::zero(sampler.samples, 0.0));
    }
    let radius = match (sampler.radius, domain.euclidean_bound()) {
        (Some(r), _) => r,
        (None, Some(b)) => b,
        (None, None) => {
            return Err(Error::InvalidParameter(
                "domain has no derivable bound; give the sampler radius explicitly".into(),
            ))
        }
    };
    measure::integrate_ball(dim, radius, sampler.samples, seed, |x| {
        if !domain.contains(x) {
            return Ok(0.0);
        }
        let r = rho.eval(&Point::from_image(x.to_vec()))?;
        if !(r >= 0.0) {
            return Err(Error::InvalidParameter(format!("density returned {r}; must be nonnegative")));
        }
        let w = match metric {
            Metric::Euclidean => 1.0,
            Metric::Hyperbolic => hyperbolic_density(x),
        };
        Ok(r.powi(dim as i32) * w)
    })
}

/// `∫_A ρ^n dh̃` over a quotient set, integrating over the Dirichlet domain of `p0`.
pub fn quotient_modulus_upper_bound(
    rho: &dyn DensityField,
    g: &GroupPresentation,
    p0: &Point,
    set: &QuotientSet,
    sampler: SamplerSpec,
    max_word_len: usize,
    seed: u64,
) -> Result<Estimate> {
    let radius = match sampler.radius {
        Some(r) => r,
        None => {
            let bound = set.radius_bound(g, p0, max_word_len)?.ok_or_else(|| {
                Error::InvalidParameter("quotient set is unbounded; give the sampler radius explicitly".into())
            })?;
            crate::mobius::euclidean_radius(crate::mobius::hyperbolic_radius(p0.norm()) + bound)
        }
    };
    let n = g.dim() as i32;
    measure::integrate_ball(g.dim(), radius, sampler.samples, seed, |x| {
        let p = Point::from_image(x.to_vec());
        if !set.contains(g, &p, max_word_len)? || !in_dirichlet_domain(g, p0, &p, max_word_len)?.inside {
            return Ok(0.0);
        }
        Ok(rho.eval(&p)?.powi(n) * hyperbolic_density(x))
    })
}

/// `ω_{n-1} (log(r2/r1))^{1-n}`, the modulus of the paths joining the
/// boundary spheres of `r1 < |x| < r2` in `R^n`.
pub fn annulus_modulus_reference(n: usize, r1: f64, r2: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter("dimension must be at least 2".into()));
    }
    if !(0.0 < r1 && r1 < r2 && r2.is_finite()) {
        return Err(Error::InvalidParameter("ring radii must satisfy 0 < r1 < r2".into()));
    }
    Ok(measure::unit_sphere_area(n) * (r2 / r1).ln().powi(1 - n as i32))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{E, PI, TAU};
    use std::sync::Arc;

    use super::*;
    use crate::group::{make_cyclic_translation, GroupPresentation};
    use crate::mobius::{self, translation_from_origin};
    use crate::paths::{PathSpace, SampledPath};
    use crate::quotient::QuotientPoint;

    fn annulus(paths: usize, slants: Vec<f64>) -> PathFamily {
        FamilySpec::Annulus { center: vec![0.0, 0.0], inner: 0.25, outer: 0.5, paths, slants, samples: 2 }
            .build(PathSpace::Ball)
            .unwrap()
    }

    #[test]
    fn reference_values() {
        assert!((annulus_modulus_reference(2, 1.0, E).unwrap() - TAU).abs() < 1e-12);
        assert!((annulus_modulus_reference(3, 1.0, E).unwrap() - 4.0 * PI).abs() < 1e-12);
        assert!((annulus_modulus_reference(2, 0.25, 0.5).unwrap() - TAU / 2f64.ln()).abs() < 1e-12);
        assert!(annulus_modulus_reference(2, 0.3, 0.3).is_err());
    }

    #[test]
    fn single_path_on_a_three_by_three_grid() {
        let p = SampledPath::segment(
            &Point::new(vec![-0.3, 0.0]).unwrap(),
            &Point::new(vec![0.3, 0.0]).unwrap(),
            2,
            PathSpace::Ball,
        )
        .unwrap();
        let fam = PathFamily::new(vec![p], None, PathSpace::Ball).unwrap();
        let spec = GridSpec::new(Metric::Euclidean).with_resolution(3).with_box(vec![-0.3, -0.3], vec![0.3, 0.3]);
        let est = discrete_modulus(&fam, &spec).unwrap();
        // three cells of side 0.2, each crossed over length 0.2: 1 / Σ ℓ²/v
        let oracle = 1.0 / (3.0 * 0.2f64.powi(2) / 0.04);
        assert!((est.estimate - oracle).abs() < 1e-9, "{}", est.estimate);
        assert_eq!(est.grid.cells_used, 3);
    }

    /// Exhaustive active-set solution of `min ρᵀVρ` subject to `Aρ >= 1`.
    fn quadratic_oracle(a: &[Vec<f64>], v: &[f64]) -> f64 {
        let k = a.len();
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << k) {
            let s: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
            let m = nalgebra::DMatrix::from_fn(s.len(), s.len(), |i, j| {
                (0..v.len()).map(|c| a[s[i]][c] * a[s[j]][c] / v[c]).sum::<f64>()
            });
            let Some(inv) = m.try_inverse() else { continue };
            let lambda = inv * nalgebra::DVector::from_element(s.len(), 1.0);
            if lambda.iter().any(|l| *l < -1e-12) {
                continue;
            }
            let rho: Vec<f64> =
                (0..v.len()).map(|c| s.iter().zip(lambda.iter()).map(|(&g, l)| a[g][c] * l).sum::<f64>() / v[c]).collect();
            if a.iter().any(|row| row.iter().zip(&rho).map(|(x, r)| x * r).sum::<f64>() < 1.0 - 1e-9) {
                continue;
            }
            best = best.min(rho.iter().zip(v).map(|(r, w)| w * r * r).sum());
        }
        best
    }

    #[test]
    fn two_crossing_paths_match_the_active_set_oracle() {
        let seg = |a: [f64; 2], b: [f64; 2]| {
            SampledPath::segment(&Point::new(a.to_vec()).unwrap(), &Point::new(b.to_vec()).unwrap(), 2, PathSpace::Ball)
                .unwrap()
        };
        let fam = PathFamily::new(
            vec![seg([-0.3, -0.05], [0.3, -0.05]), seg([-0.3, -0.25], [0.3, 0.15])],
            None,
            PathSpace::Ball,
        )
        .unwrap();
        let spec = GridSpec { tolerance: 1e-10, ..GridSpec::new(Metric::Euclidean) }
            .with_resolution(3)
            .with_box(vec![-0.3, -0.3], vec![0.3, 0.3]);
        let est = discrete_modulus_report(&fam, &spec).unwrap();
        // rebuild the constraint matrix by hand: row y=-0.05 stays in the middle row
        let mut a = vec![vec![0.0; 9]; 2];
        for i in 0..3 {
            a[0][3 + i] = 0.2;
        }
        // the slanted path y = -0.25 + 2(x + 0.3)/3 changes rows at x = -0.075 and x = 0.225
        let slope_len = |dx: f64| dx * (1.0 + (0.4f64 / 0.6).powi(2)).sqrt();
        a[1][0] = slope_len(0.2);
        a[1][1] = slope_len(0.025);
        a[1][4] = slope_len(0.175);
        a[1][5] = slope_len(0.125);
        a[1][8] = slope_len(0.075);
        let oracle = quadratic_oracle(&a, &[0.04; 9]);
        assert!((est.upper_bound - oracle).abs() < 1e-6 * oracle, "{} vs {}", est.upper_bound, oracle);
        assert!(est.lower_bound <= oracle * (1.0 + 1e-9));
    }

    #[test]
    fn annulus_benchmark() {
        let fam = annulus(2048, vec![]);
        let est = discrete_modulus(&fam, &GridSpec::new(Metric::Euclidean)).unwrap();
        let exact = TAU / 2f64.ln();
        assert!((est.estimate / exact - 1.0).abs() < 0.02, "{} vs {exact}", est.estimate);
        assert!(est.lower_bound <= est.upper_bound);
    }

    #[test]
    fn enlarging_the_family_never_decreases_the_estimate() {
        let spec = GridSpec::new(Metric::Euclidean).with_resolution(32).with_box(vec![-0.51, -0.51], vec![0.51, 0.51]);
        let small = annulus(128, vec![]).subsample(2);
        let mid = annulus(128, vec![]);
        let large = mid.union(&annulus(128, vec![0.5])).unwrap();
        let m: Vec<ModulusEstimate> = [small, mid, large].iter().map(|f| discrete_modulus(f, &spec).unwrap()).collect();
        for w in m.windows(2) {
            // certified: lower(Γ) <= M(Γ) <= M(Γ') <= upper(Γ')
            assert!(w[1].upper_bound >= w[0].lower_bound);
            assert!(w[1].estimate >= w[0].estimate * (1.0 - 1e-3), "{} < {}", w[1].estimate, w[0].estimate);
        }
    }

    #[test]
    fn conformal_invariance_under_a_moebius_map() {
        let base = FamilySpec::Annulus {
            center: vec![0.0, 0.0],
            inner: 0.1,
            outer: 0.2,
            paths: 2048,
            slants: vec![],
            samples: 2,
        };
        let map = translation_from_origin(&Point::new(vec![0.3, 0.1]).unwrap());
        let moved = FamilySpec::Transformed { map, family: Box::new(base.clone()) };
        let spec = GridSpec::new(Metric::Hyperbolic);
        let a = discrete_modulus(&base.build(PathSpace::Ball).unwrap(), &spec).unwrap().estimate;
        let b = discrete_modulus(&moved.build(PathSpace::Ball).unwrap(), &spec).unwrap().estimate;
        assert!((a / b - 1.0).abs() < 0.03, "{a} vs {b}");
    }

    #[test]
    fn pencil_estimates_fall_under_refinement() {
        let fam = FamilySpec::Pencil { center: vec![0.0, 0.0], radius: 0.4, paths: 512, samples: 2 }
            .build(PathSpace::Ball)
            .unwrap();
        let est: Vec<f64> = [8, 32, 128]
            .iter()
            .map(|&r| discrete_modulus(&fam, &GridSpec::new(Metric::Euclidean).with_resolution(r)).unwrap().estimate)
            .collect();
        assert!(est[0] > est[1] && est[1] > est[2], "{est:?}");
    }

    #[test]
    fn admissibility_examples() {
        let fam = annulus(64, vec![0.7]);
        let zero = is_admissible(&ConstantDensity(0.0), &fam, 32, Metric::Euclidean, 12).unwrap();
        assert!(!zero.pass && zero.min_integral == 0.0);
        let ext = AnnulusExtremal { center: vec![0.0, 0.0], inner: 0.25, outer: 0.5, metric: Metric::Euclidean };
        let rep = is_admissible(&ext, &fam, 1000, Metric::Euclidean, 12).unwrap();
        assert!(rep.pass && (rep.min_integral - 1.0).abs() < 1e-4, "{rep:?}");
        assert!(rep.mean_integral > 1.0);

        let trivial = Arc::new(GroupPresentation::trivial(2).unwrap());
        let c = Point::new(vec![0.2, 0.1]).unwrap();
        let hyp = FamilySpec::HypAnnulus { center: c.coords().to_vec(), inner: 0.2, outer: 0.5, paths: 32, samples: 4 }
            .build(PathSpace::Ball)
            .unwrap();
        let ring = RingTestDensity::new(QuotientPoint::new(c, trivial).unwrap(), 0.2, 0.5, Eta::Uniform, 4).unwrap();
        let rep = is_admissible(&ring, &hyp, 32, Metric::Hyperbolic, 4).unwrap();
        assert!(rep.pass && (rep.min_integral - 1.0).abs() < 1e-3, "{rep:?}");

        let p = SampledPath::segment(&Point::origin(2), &Point::new(vec![0.5, 0.2]).unwrap(), 5, PathSpace::Ball).unwrap();
        let len = p.hyp_length();
        let single = PathFamily::new(vec![p], None, PathSpace::Ball).unwrap();
        let rep = is_admissible(&ConstantDensity(1.0 / len), &single, 1, Metric::Hyperbolic, 4).unwrap();
        assert!(rep.pass && (rep.min_integral - 1.0).abs() < 1e-6);
    }

    #[test]
    fn upper_bounds() {
        let d = Region::EuclideanAnnulus { center: vec![0.0, 0.0], inner: 0.25, outer: 0.5 };
        let z = modulus_upper_bound(&ConstantDensity(0.0), &d, 2, Metric::Euclidean, SamplerSpec::default(), 1).unwrap();
        assert_eq!(z.estimate, 0.0);
        let ext = AnnulusExtremal { center: vec![0.0, 0.0], inner: 0.25, outer: 0.5, metric: Metric::Euclidean };
        let ub = modulus_upper_bound(&ext, &d, 2, Metric::Euclidean, SamplerSpec::with_samples(400_000), 1).unwrap();
        let exact = TAU / 2f64.ln();
        assert!((ub.estimate - exact).abs() < 4.0 * ub.stderr + 1e-3, "{ub:?}");
        // the transported density has the same integral against the hyperbolic element
        let h = AnnulusExtremal { metric: Metric::Hyperbolic, ..ext };
        let ubh = modulus_upper_bound(&h, &d, 2, Metric::Hyperbolic, SamplerSpec::with_samples(400_000), 1).unwrap();
        assert!((ubh.estimate - exact).abs() < 4.0 * ubh.stderr + 1e-3, "{ubh:?}");
    }

    #[test]
    fn ring_density_bound_matches_direct_integration() {
        // inside a normal neighbourhood the quotient ring is a hyperbolic ring
        let g = Arc::new(make_cyclic_translation(2, 1.0).unwrap());
        let p0 = QuotientPoint::new(Point::origin(2), g.clone()).unwrap();
        let (r1, r2) = (0.1, 0.4);
        let rho = RingTestDensity::new(p0, r1, r2, Eta::Uniform, 12).unwrap();
        let set = QuotientSet::Annulus { center: vec![0.0, 0.0], inner: r1, outer: r2 };
        let ub =
            quotient_modulus_upper_bound(&rho, &g, &Point::origin(2), &set, SamplerSpec::with_samples(100_000), 12, 3)
                .unwrap();
        let direct = TAU * (r2.cosh() - r1.cosh()) / (r2 - r1).powi(2);
        assert!((ub.estimate - direct).abs() < 4.0 * ub.stderr, "{ub:?} vs {direct}");
    }

    #[test]
    fn upper_bound_dominates_the_discrete_estimate() {
        let fam = annulus(1024, vec![]);
        let est = discrete_modulus(&fam, &GridSpec::new(Metric::Euclidean)).unwrap();
        let d = fam.domain().unwrap().clone();
        for rho in [
            Box::new(AnnulusExtremal { center: vec![0.0, 0.0], inner: 0.25, outer: 0.5, metric: Metric::Euclidean })
                as Box<dyn DensityField>,
            Box::new(FnDensity::new(|x: &Point| if (0.25..=0.5).contains(&mobius::norm(x.coords())) { 4.0 } else { 0.0 })),
        ] {
            assert!(is_admissible(&rho, &fam, 64, Metric::Euclidean, 12).unwrap().pass);
            let ub = modulus_upper_bound(&rho, &d, 2, Metric::Euclidean, SamplerSpec::default(), 9).unwrap();
            assert!(ub.estimate >= 0.98 * est.estimate, "{} < {}", ub.estimate, est.estimate);
        }
    }
}
