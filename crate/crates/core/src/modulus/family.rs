//! Path families: procedural joining families and explicit path lists.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobius::{self, MobiusMap, Point};
use crate::paths::{PathSpace, SampledPath};
use crate::region::Region;
use crate::rng;

/// Hyperbolic gap used when a family is transported by a map, so that
/// polylines follow curved images closely.
pub const TRANSPORT_GAP: f64 = 1e-2;

fn default_paths() -> usize {
    1024
}

fn default_samples() -> usize {
    16
}

/// Named family constructors. Joining families connect the two boundary
/// components of a ring inside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// Radial segments from `|x - c| = inner` to `|x - c| = outer`, plus
    /// slanted chords in the plane. `slants` are fractions in `(-1, 1)` of
    /// the widest angular offset that keeps a chord inside the ring.
    Annulus {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
        #[serde(default = "default_paths")]
        paths: usize,
        #[serde(default)]
        slants: Vec<f64>,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    /// Hyperbolic geodesic rays across the ring `inner < h(x, c) < outer`.
    HypAnnulus {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
        #[serde(default = "default_paths")]
        paths: usize,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    /// Segments parallel to `axis` joining opposite faces of a box.
    Parallel {
        lo: Vec<f64>,
        hi: Vec<f64>,
        axis: usize,
        #[serde(default = "default_paths")]
        paths: usize,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    /// Diameters of `B(center, radius)`; every path crosses the center.
    Pencil {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "default_paths")]
        paths: usize,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    /// Concentric circles in the plane of the first two coordinates.
    Circles {
        center: Vec<f64>,
        radii: Vec<f64>,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    Explicit {
        paths: Vec<Vec<Vec<f64>>>,
        #[serde(default)]
        domain: Option<Region>,
    },
    /// Image of a family under a Möbius map.
    Transformed { map: MobiusMap, family: Box<FamilySpec> },
}

#[derive(Debug, Clone)]
pub struct PathFamily {
    paths: Vec<SampledPath>,
    /// Region containing the paths; cell volumes are clipped to it.
    domain: Option<Region>,
    dim: usize,
    space: PathSpace,
}

impl PathFamily {
    pub fn new(paths: Vec<SampledPath>, domain: Option<Region>, space: PathSpace) -> Result<Self> {
        let dim = paths.first().ok_or_else(|| Error::InvalidParameter("empty path family".into()))?.dim();
        if let Some(p) = paths.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
        }
        Ok(PathFamily { paths, domain, dim, space })
    }

    pub fn paths(&self) -> &[SampledPath] {
        &self.paths
    }

    pub fn domain(&self) -> Option<&Region> {
        self.domain.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn space(&self) -> &PathSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Union with another family of the same dimension.
    pub fn union(&self, other: &PathFamily) -> Result<PathFamily> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let domain = match (&self.domain, &other.domain) {
            (Some(a), Some(b)) if a == b => Some(a.clone()),
            (Some(a), Some(b)) => Some(Region::Complement {
                region: Box::new(Region::Intersection {
                    regions: vec![
                        Region::Complement { region: Box::new(a.clone()) },
                        Region::Complement { region: Box::new(b.clone()) },
                    ],
                }),
            }),
            _ => None,
        };
        let paths = self.paths.iter().chain(&other.paths).cloned().collect();
        Ok(PathFamily { paths, domain, dim: self.dim, space: self.space.clone() })
    }

    /// Every `step`-th path.
    pub fn subsample(&self, step: usize) -> PathFamily {
        let paths = self.paths.iter().step_by(step.max(1)).cloned().collect();
        PathFamily { paths, ..self.clone() }
    }

    /// Image family `f(Γ)`: paths are refined to `gap` and mapped pointwise.
    pub fn map<F>(&self, f: F, gap: f64, domain: Option<Region>, space: PathSpace) -> Result<PathFamily>
    where
        F: Fn(&Point) -> Result<Point>,
    {
        let paths = self
            .paths
            .iter()
            .map(|p| p.refine(gap).map_points(&f, space.clone()))
            .collect::<Result<Vec<_>>>()?;
        PathFamily::new(paths, domain, space)
    }

    /// Componentwise bounding box of all samples.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in &self.paths {
            for x in p.points() {
                for (i, c) in x.coords().iter().enumerate() {
                    lo[i] = lo[i].min(*c);
                    hi[i] = hi[i].max(*c);
                }
            }
        }
        (lo, hi)
    }
}

fn check_count(n: usize, what: &str) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter(format!("{what} must be positive")));
    }
    Ok(())
}

/// `count` nearly uniform unit directions in dimension `dim`.
pub fn directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    match dim {
        2 => (0..count)
            .map(|k| {
                let a = TAU * k as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * k as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut r = rng::stream(0xd1e5, 0);
            (0..count).map(|_| rng::unit_vector(&mut r, dim)).collect()
        }
    }
}

fn offset(center: &[f64], dir: &[f64], s: f64) -> Result<Point> {
    Point::new(center.iter().zip(dir).map(|(c, d)| c + s * d).collect())
}

impl FamilySpec {
    pub fn build(&self, space: PathSpace) -> Result<PathFamily> {
        match self {
            FamilySpec::Annulus { center, inner, outer, paths, slants, samples } => {
                if !(0.0 < *inner && inner < outer) {
                    return Err(Error::InvalidParameter("annulus radii must satisfy 0 < inner < outer".into()));
                }
                check_count(*paths, "path count")?;
                let dim = center.len();
                let dirs = directions(dim, *paths);
                let mut out = Vec::with_capacity(paths * (1 + slants.len()));
                for d in &dirs {
                    let a = offset(center, d, *inner)?;
                    let b = offset(center, d, *outer)?;
                    out.push(SampledPath::segment(&a, &b, *samples, space.clone())?);
                }
                if !slants.is_empty() {
                    if dim != 2 {
                        return Err(Error::InvalidParameter("slanted chords are planar only".into()));
                    }
                    let widest = (inner / outer).acos();
                    for s in slants {
                        if !(s.abs() < 1.0) {
                            return Err(Error::InvalidParameter("slants must lie in (-1, 1)".into()));
                        }
                        for d in &dirs {
                            let t = d[1].atan2(d[0]) + s * widest;
                            let a = offset(center, d, *inner)?;
                            let b = offset(center, &[t.cos(), t.sin()], *outer)?;
                            out.push(SampledPath::segment(&a, &b, *samples, space.clone())?);
                        }
                    }
                }
                let domain = Region::EuclideanAnnulus { center: center.clone(), inner: *inner, outer: *outer };
                PathFamily::new(out, Some(domain), space)
            }
            FamilySpec::HypAnnulus { center, inner, outer, paths, samples } => {
                if !(0.0 < *inner && inner < outer) {
                    return Err(Error::InvalidParameter("annulus radii must satisfy 0 < inner < outer".into()));
                }
                let c = Point::new(center.clone())?;
                let chart = FamilySpec::Annulus {
                    center: vec![0.0; center.len()],
                    inner: mobius::euclidean_radius(*inner),
                    outer: mobius::euclidean_radius(*outer),
                    paths: *paths,
                    slants: vec![],
                    samples: *samples,
                }
                .build(space.clone())?;
                let t = mobius::translation_from_origin(&c);
                let domain = Region::HypAnnulus { center: center.clone(), inner: *inner, outer: *outer };
                chart.map(|x| Ok(t.apply(x)), TRANSPORT_GAP, Some(domain), space)
            }
            FamilySpec::Parallel { lo, hi, axis, paths, samples } => {
                let dim = lo.len();
                if hi.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: hi.len() });
                }
                if *axis >= dim || lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                    return Err(Error::InvalidParameter("parallel family needs lo < hi and a valid axis".into()));
                }
                check_count(*paths, "path count")?;
                // paths sit at cell-centred offsets of a lattice over the cross section
                let per_axis = (*paths as f64).powf(1.0 / (dim - 1) as f64).round().max(1.0) as usize;
                let others: Vec<usize> = (0..dim).filter(|i| i != axis).collect();
                let total = per_axis.pow(others.len() as u32);
                let mut out = Vec::with_capacity(total);
                for k in 0..total {
                    let mut a = lo.clone();
                    let mut rem = k;
                    for &i in &others {
                        let j = rem % per_axis;
                        rem /= per_axis;
                        a[i] = lo[i] + (hi[i] - lo[i]) * (j as f64 + 0.5) / per_axis as f64;
                    }
                    let mut b = a.clone();
                    b[*axis] = hi[*axis];
                    out.push(SampledPath::segment(&Point::new(a)?, &Point::new(b)?, *samples, space.clone())?);
                }
                let mut regions = Vec::new();
                for i in 0..dim {
                    let mut n = vec![0.0; dim];
                    n[i] = 1.0;
                    regions.push(Region::HalfSpace { normal: n.clone(), offset: hi[i] });
                    n[i] = -1.0;
                    regions.push(Region::HalfSpace { normal: n, offset: -lo[i] });
                }
                PathFamily::new(out, Some(Region::Intersection { regions }), space)
            }
            FamilySpec::Pencil { center, radius, paths, samples } => {
                check_count(*paths, "path count")?;
                let dim = center.len();
                let dirs: Vec<Vec<f64>> = if dim == 2 {
                    (0..*paths)
                        .map(|k| {
                            let a = PI * (k as f64 + 0.5) / *paths as f64;
                            vec![a.cos(), a.sin()]
                        })
                        .collect()
                } else {
                    directions(dim, *paths)
                };
                let mut out = Vec::with_capacity(*paths);
                for d in &dirs {
                    let a = offset(center, d, -radius)?;
                    let b = offset(center, d, *radius)?;
                    out.push(SampledPath::segment(&a, &b, *samples, space.clone())?);
                }
                let domain = Region::EuclideanBall { center: center.clone(), radius: *radius };
                PathFamily::new(out, Some(domain), space)
            }
            FamilySpec::Circles { center, radii, samples } => {
                if center.len() < 2 {
                    return Err(Error::InvalidParameter("circles need dimension at least 2".into()));
                }
                let mut out = Vec::with_capacity(radii.len());
                for r in radii {
                    let c = center.clone();
                    let r = *r;
                    out.push(SampledPath::from_fn(
                        move |t| {
                            let mut x = c.clone();
                            x[0] += r * t.cos();
                            x[1] += r * t.sin();
                            Point::new(x)
                        },
                        0.0,
                        TAU,
                        (*samples).max(8),
                        space.clone(),
                    )?);
                }
                PathFamily::new(out, None, space)
            }
            FamilySpec::Explicit { paths, domain } => {
                let paths = paths.iter().map(|rows| SampledPath::from_rows(rows, space.clone())).collect::<Result<_>>()?;
                PathFamily::new(paths, domain.clone(), space)
            }
            FamilySpec::Transformed { map, family } => {
                map.validate()?;
                let base = family.build(space.clone())?;
                let domain = base.domain().map(|r| Region::Transformed { map: map.clone(), region: Box::new(r.clone()) });
                base.map(|x| Ok(map.apply(x)), TRANSPORT_GAP, domain, space)
            }
        }
    }
}
