//! Composable regions of the ball and of the quotient, serializable as JSON.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::group::GroupPresentation;
use crate::mobius::{self, hyp_dist_coords, MobiusMap, Point};
use crate::quotient::projected_pseudo_dist;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    Empty,
    EuclideanBall { center: Vec<f64>, radius: f64 },
    HypBall { center: Vec<f64>, radius: f64 },
    EuclideanAnnulus { center: Vec<f64>, inner: f64, outer: f64 },
    HypAnnulus { center: Vec<f64>, inner: f64, outer: f64 },
    /// `{x : normal · x <= offset}`.
    HalfSpace { normal: Vec<f64>, offset: f64 },
    Complement { region: Box<Region> },
    Intersection { regions: Vec<Region> },
    /// Image `g(A)` of a region under a Möbius map.
    Transformed { map: MobiusMap, region: Box<Region> },
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Empty => false,
            Region::EuclideanBall { center, radius } => mobius::dist_sq(x, center) < radius * radius,
            Region::HypBall { center, radius } => hyp_dist_coords(center, x) < *radius,
            Region::EuclideanAnnulus { center, inner, outer } => {
                let r = mobius::dist_sq(x, center).sqrt();
                *inner < r && r < *outer
            }
            Region::HypAnnulus { center, inner, outer } => {
                let r = hyp_dist_coords(center, x);
                *inner < r && r < *outer
            }
            Region::HalfSpace { normal, offset } => mobius::dot(normal, x) <= *offset,
            Region::Complement { region } => !region.contains(x),
            Region::Intersection { regions } => regions.iter().all(|r| r.contains(x)),
            Region::Transformed { map, region } => region.contains(&map.inverse().apply_coords(x)),
        }
    }

    /// Radius `R` with the region inside the Euclidean ball `B(0, R)`, when
    /// one can be derived from the description.
    pub fn euclidean_bound(&self) -> Option<f64> {
        match self {
            Region::Empty => Some(0.0),
            Region::EuclideanBall { center, radius } | Region::EuclideanAnnulus { center, outer: radius, .. } => {
                Some(mobius::norm(center) + radius)
            }
            Region::HypBall { center, radius } | Region::HypAnnulus { center, outer: radius, .. } => {
                let c = mobius::norm(center);
                if c >= 1.0 {
                    return None;
                }
                Some(mobius::euclidean_radius(mobius::hyperbolic_radius(c) + radius))
            }
            Region::HalfSpace { .. } | Region::Complement { .. } => None,
            Region::Intersection { regions } => regions
                .iter()
                .filter_map(Region::euclidean_bound)
                .chain(box_bound(regions))
                .reduce(f64::min),
            Region::Transformed { map, region } => {
                let r = region.euclidean_bound()?;
                if r >= 1.0 {
                    return None;
                }
                let dim = map.dim().or_else(|| region.dim())?;
                let shift = mobius::norm(&map.apply_coords(&vec![0.0; dim]));
                Some(mobius::euclidean_radius(mobius::hyperbolic_radius(shift) + mobius::hyperbolic_radius(r)))
            }
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Region::Empty => None,
            Region::EuclideanBall { center, .. }
            | Region::HypBall { center, .. }
            | Region::EuclideanAnnulus { center, .. }
            | Region::HypAnnulus { center, .. } => Some(center.len()),
            Region::HalfSpace { normal, .. } => Some(normal.len()),
            Region::Complement { region } => region.dim(),
            Region::Intersection { regions } => regions.iter().find_map(Region::dim),
            Region::Transformed { map, region } => map.dim().or_else(|| region.dim()),
        }
    }

    pub fn hyp_ball(center: &Point, radius: f64) -> Region {
        Region::HypBall { center: center.coords().to_vec(), radius }
    }
}

/// Bound of an intersection whose half-spaces include an axis-aligned box.
fn box_bound(regions: &[Region]) -> Option<f64> {
    let dim = regions.iter().find_map(Region::dim)?;
    let mut hi = vec![f64::INFINITY; dim];
    let mut lo = vec![f64::NEG_INFINITY; dim];
    for r in regions {
        let Region::HalfSpace { normal, offset } = r else { continue };
        let nz: Vec<usize> = (0..normal.len()).filter(|&i| normal[i] != 0.0).collect();
        if let [i] = nz[..] {
            let b = offset / normal[i];
            if normal[i] > 0.0 {
                hi[i] = hi[i].min(b);
            } else {
                lo[i] = lo[i].max(b);
            }
        }
    }
    let r2: f64 = lo.iter().zip(&hi).map(|(a, b)| a.abs().max(b.abs()).powi(2)).sum();
    r2.is_finite().then(|| r2.sqrt())
}

/// Sets of quotient points, described through the quotient metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum QuotientSet {
    Always,
    Never,
    /// `B̃(π(center), radius)`.
    Ball { center: Vec<f64>, radius: f64 },
    Annulus { center: Vec<f64>, inner: f64, outer: f64 },
    Complement { set: Box<QuotientSet> },
    Intersection { sets: Vec<QuotientSet> },
}

impl QuotientSet {
    pub fn contains(&self, g: &GroupPresentation, x: &Point, max_word_len: usize) -> Result<bool> {
        Ok(match self {
            QuotientSet::Always => true,
            QuotientSet::Never => false,
            QuotientSet::Ball { center, radius } => {
                let c = Point::new(center.clone())?;
                projected_pseudo_dist(x, &c, g, max_word_len)?.value < *radius
            }
            QuotientSet::Annulus { center, inner, outer } => {
                let c = Point::new(center.clone())?;
                let d = projected_pseudo_dist(x, &c, g, max_word_len)?.value;
                *inner < d && d < *outer
            }
            QuotientSet::Complement { set } => !set.contains(g, x, max_word_len)?,
            QuotientSet::Intersection { sets } => {
                for s in sets {
                    if !s.contains(g, x, max_word_len)? {
                        return Ok(false);
                    }
                }
                true
            }
        })
    }

    /// Upper bound on `h̃(p, π(p0))` over the set.
    pub fn radius_bound(&self, g: &GroupPresentation, p0: &Point, max_word_len: usize) -> Result<Option<f64>> {
        Ok(match self {
            QuotientSet::Never => Some(0.0),
            QuotientSet::Always | QuotientSet::Complement { .. } => None,
            QuotientSet::Ball { center, radius } | QuotientSet::Annulus { center, outer: radius, .. } => {
                let c = Point::new(center.clone())?;
                Some(radius + projected_pseudo_dist(&c, p0, g, max_word_len)?.value)
            }
            QuotientSet::Intersection { sets } => {
                let mut best: Option<f64> = None;
                for s in sets {
                    if let Some(b) = s.radius_bound(g, p0, max_word_len)? {
                        best = Some(best.map_or(b, |x| x.min(b)));
                    }
                }
                best
            }
        })
    }
}
