//! Monte Carlo integration against the hyperbolic volume element
//! `dV = 2^n dm / (1 - |x|^2)^n` and the induced quotient measure.
//!
//! Samples are drawn uniformly from a Euclidean ball `B(0, R)` in batches of
//! [`rng::BATCH`]; batch `k` uses random stream `k`, and batch sums are reduced
//! in order, so estimates depend only on the seed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupPresentation;
use crate::mobius::{self, Point};
use crate::quotient::in_dirichlet_domain;
use crate::region::{QuotientSet, Region};
use crate::rng;

/// Smallest admissible distance between the sampling ball and the unit sphere.
pub const MIN_MARGIN: f64 = 1e-6;

pub const DEFAULT_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub samples: usize,
    /// Radius of the Euclidean sampling ball; derived from the region when absent.
    #[serde(default)]
    pub radius: Option<f64>,
}

impl Default for SamplerSpec {
    fn default() -> Self {
        SamplerSpec { samples: DEFAULT_SAMPLES, radius: None }
    }
}

impl SamplerSpec {
    pub fn with_samples(samples: usize) -> Self {
        SamplerSpec { samples, radius: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    pub sampler_radius: f64,
}

impl Estimate {
    pub fn zero(samples: usize, sampler_radius: f64) -> Self {
        Estimate { estimate: 0.0, stderr: 0.0, samples, sampler_radius }
    }
}

/// Volume of the Euclidean unit ball in `n` dimensions.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Area `ω_{n-1}` of the unit sphere `S^{n-1}` in `R^n`.
pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

/// Hyperbolic volume element density `(2 / (1 - |x|^2))^n`.
pub fn hyperbolic_density(x: &[f64]) -> f64 {
    mobius::conformal_factor(x).powi(x.len() as i32)
}

/// Hyperbolic volume of a ball of radius `r`: `ω_{n-1} ∫_0^r sinh^{n-1}(t) dt`.
pub fn hyperbolic_ball_volume(n: usize, r: f64) -> f64 {
    let w = unit_sphere_area(n);
    match n {
        2 => w * (r.cosh() - 1.0),
        3 => w * 0.25 * ((2.0 * r).sinh() - 2.0 * r),
        _ => {
            // composite Simpson on a fine grid
            let m = 20_000;
            let h = r / m as f64;
            let f = |t: f64| t.sinh().powi(n as i32 - 1);
            let mut s = f(0.0) + f(r);
            for i in 1..m {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
            }
            w * s * h / 3.0
        }
    }
}

fn check_sampler_radius(radius: f64) -> Result<()> {
    if !(radius >= 0.0) {
        return Err(Error::InvalidParameter("sampler radius must be nonnegative".into()));
    }
    if radius > 1.0 - MIN_MARGIN {
        return Err(Error::DomainProximity { margin: 1.0 - radius });
    }
    Ok(())
}

/// `∫_{B(0,R)} f dm` by uniform sampling; `f` may return an error to abort.
pub fn integrate_ball<F>(dim: usize, radius: f64, samples: usize, seed: u64, f: F) -> Result<Estimate>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    check_sampler_radius(radius)?;
    if samples == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let batches = samples.div_ceil(rng::BATCH);
    let sums: Vec<(f64, f64)> = (0..batches)
        .into_par_iter()
        .map(|k| {
            let n = if k + 1 == batches { samples - k * rng::BATCH } else { rng::BATCH };
            let mut r = rng::stream(seed, k as u64);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let x = rng::uniform_in_ball(&mut r, dim, radius);
                let v = f(&x)?;
                s += v;
                s2 += v * v;
            }
            Ok((s, s2))
        })
        .collect::<Result<_>>()?;
    let (s, s2) = sums.iter().fold((0.0, 0.0), |acc, b| (acc.0 + b.0, acc.1 + b.1));
    let n = samples as f64;
    let mean = s / n;
    let var = if samples > 1 { ((s2 - s * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    let vol = unit_ball_volume(dim) * radius.powi(dim as i32);
    Ok(Estimate { estimate: vol * mean, stderr: vol * (var / n).sqrt(), samples, sampler_radius: radius })
}

/// Hyperbolic measure `V(A)` of a region.
pub fn hyp_measure(region: &Region, dim: usize, sampler: SamplerSpec, seed: u64) -> Result<Estimate> {
    if let Region::Empty = region {
        return Ok(Estimate::zero(sampler.samples, 0.0));
    }
    let radius = match (sampler.radius, region.euclidean_bound()) {
        (Some(r), _) => r,
        (None, Some(b)) => b,
        (None, None) => {
            return Err(Error::InvalidParameter(
                "region has no derivable bound; give the sampler radius explicitly".into(),
            ))
        }
    };
    if let Some(b) = region.euclidean_bound() {
        if b > 1.0 - MIN_MARGIN {
            return Err(Error::DomainProximity { margin: 1.0 - b });
        }
    }
    integrate_ball(dim, radius, sampler.samples, seed, |x| {
        Ok(if region.contains(x) { hyperbolic_density(x) } else { 0.0 })
    })
}

/// Quotient measure `V(P ∩ π^{-1}(A))` with `P` the Dirichlet domain of `p0`.
pub fn quotient_measure(
    g: &GroupPresentation,
    p0: &Point,
    set: &QuotientSet,
    sampler: SamplerSpec,
    max_word_len: usize,
    seed: u64,
) -> Result<Estimate> {
    if let QuotientSet::Never = set {
        return Ok(Estimate::zero(sampler.samples, 0.0));
    }
    let radius = match sampler.radius {
        Some(r) => r,
        None => {
            let bound = set.radius_bound(g, p0, max_word_len)?.ok_or_else(|| {
                Error::InvalidParameter("quotient set is unbounded; give the sampler radius explicitly".into())
            })?;
            mobius::euclidean_radius(mobius::hyperbolic_radius(p0.norm()) + bound)
        }
    };
    integrate_ball(g.dim(), radius, sampler.samples, seed, |x| {
        let p = Point::from_image(x.to_vec());
        if !set.contains(g, &p, max_word_len)? {
            return Ok(0.0);
        }
        Ok(if in_dirichlet_domain(g, p0, &p, max_word_len)?.inside { hyperbolic_density(x) } else { 0.0 })
    })
}
