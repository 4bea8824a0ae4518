//! JSON-addressable registries of points, maps and densities.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupPresentation;
use crate::maps::{build_fm_family, ChartLinearMap, IdentityQuotientMap, MobiusQuotientMap, QuotientMap, RadialExample, SmoothMap};
use crate::mobius::{self, MobiusMap, Point};
use crate::modulus::{AnnulusExtremal, ConstantDensity, DensityField, Eta, Metric, RingTestDensity};
use crate::quotient::QuotientPoint;

/// A point given by coordinates, or by signed hyperbolic distance along the
/// first axis: `[0.1, 0.2]` or `{"axis": 0.7}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Coords(Vec<f64>),
    Axis {
        axis: f64,
    },
}

impl PointSpec {
    pub fn build(&self, dim: usize) -> Result<Point> {
        match self {
            PointSpec::Coords(c) => {
                if c.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: c.len() });
                }
                Point::new(c.clone())
            }
            PointSpec::Axis { axis } => Point::new(Point::on_axis(dim, *axis).into_coords()),
        }
    }
}

fn default_m() -> u32 {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Identity,
    /// `translate ∘ chain`: the primitive chain, then the hyperbolic
    /// translation taking 0 to `translate`.
    Moebius {
        #[serde(default)]
        chain: MobiusMap,
        #[serde(default)]
        translate: Option<PointSpec>,
    },
    /// Chart map `h_m` on the whole ball; not a quotient map.
    RadialExample {
        alpha: f64,
        #[serde(default = "default_m")]
        m: u32,
    },
    FmFamily {
        p0: PointSpec,
        r0: f64,
        alpha: f64,
        #[serde(default = "default_m")]
        m: u32,
    },
    /// `x -> A x` in the chart centred at `center`.
    ChartLinear {
        #[serde(default)]
        center: Option<PointSpec>,
        matrix: Vec<Vec<f64>>,
    },
}

fn dense(rows: &[Vec<f64>], dim: usize) -> Result<DMatrix<f64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::InvalidParameter(format!("matrix must be {dim}x{dim}")));
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

impl MapSpec {
    fn moebius(chain: &MobiusMap, translate: &Option<PointSpec>, dim: usize) -> Result<MobiusMap> {
        chain.validate()?;
        if let Some(d) = chain.dim() {
            if d != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: d });
            }
        }
        Ok(match translate {
            Some(t) => mobius::translation_from_origin(&t.build(dim)?).compose(chain),
            None => chain.clone(),
        })
    }

    /// The map on the quotient `B^n / G`.
    pub fn build_quotient(&self, group: &Arc<GroupPresentation>, max_word_len: usize) -> Result<Box<dyn QuotientMap>> {
        let dim = group.dim();
        Ok(match self {
            MapSpec::Identity => Box::new(IdentityQuotientMap::new(group.clone())),
            MapSpec::Moebius { chain, translate } => {
                Box::new(MobiusQuotientMap::new(group.clone(), Self::moebius(chain, translate, dim)?)?)
            }
            MapSpec::RadialExample { .. } => {
                return Err(Error::InvalidParameter(
                    "radial_example is a chart map; use fm_family for the induced quotient map".into(),
                ))
            }
            MapSpec::FmFamily { p0, r0, alpha, m } => {
                let p = QuotientPoint::new(p0.build(dim)?, group.clone())?;
                Box::new(build_fm_family(&p, *r0, *alpha, *m, max_word_len)?)
            }
            MapSpec::ChartLinear { center, matrix } => {
                let c = match center {
                    Some(c) => c.build(dim)?,
                    None => Point::origin(dim),
                };
                Box::new(ChartLinearMap::new(group.clone(), c, dense(matrix, dim)?)?)
            }
        })
    }

    /// The map as a smooth map of the ball, when it is one globally.
    pub fn build_smooth(&self, dim: usize) -> Result<Option<Box<dyn SmoothMap>>> {
        Ok(match self {
            MapSpec::Identity => Some(Box::new(crate::maps::IdentityMap(dim))),
            MapSpec::Moebius { chain, translate } => Some(Box::new(Self::moebius(chain, translate, dim)?)),
            MapSpec::RadialExample { alpha, m } => Some(Box::new(RadialExample::new(dim, *alpha, *m)?)),
            MapSpec::FmFamily { .. } | MapSpec::ChartLinear { .. } => None,
        })
    }

    /// Same spec with `m` replaced, for the families indexed by `m`.
    pub fn with_m(&self, new_m: u32) -> Result<MapSpec> {
        match self {
            MapSpec::RadialExample { alpha, .. } => Ok(MapSpec::RadialExample { alpha: *alpha, m: new_m }),
            MapSpec::FmFamily { p0, r0, alpha, .. } => {
                Ok(MapSpec::FmFamily { p0: p0.clone(), r0: *r0, alpha: *alpha, m: new_m })
            }
            _ => Err(Error::InvalidParameter("only radial_example and fm_family are indexed by m".into())),
        }
    }
}

fn default_eta() -> Eta {
    Eta::Log
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Constant {
        value: f64,
    },
    AnnulusExtremal {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
        metric: Metric,
    },
    /// Ring test density about `π(center)` with quotient radii `inner < outer`.
    RingTest {
        center: PointSpec,
        inner: f64,
        outer: f64,
        #[serde(default = "default_eta")]
        eta: Eta,
    },
    /// `log(e / |x|)`.
    #[serde(alias = "log-e-over-r")]
    LogEOverR,
    /// `1 / |x|`.
    #[serde(alias = "inverse-norm")]
    InverseNorm,
}

struct Radial {
    name: &'static str,
    f: fn(f64) -> f64,
}

impl DensityField for Radial {
    fn eval(&self, x: &Point) -> Result<f64> {
        Ok((self.f)(x.norm()))
    }

    fn describe(&self) -> String {
        self.name.into()
    }
}

impl DensitySpec {
    pub fn build(&self, group: &Arc<GroupPresentation>, max_word_len: usize) -> Result<Box<dyn DensityField>> {
        Ok(match self {
            DensitySpec::Constant { value } => {
                if !(*value >= 0.0 && value.is_finite()) {
                    return Err(Error::InvalidParameter("densities are finite and nonnegative".into()));
                }
                Box::new(ConstantDensity(*value))
            }
            DensitySpec::AnnulusExtremal { center, inner, outer, metric } => {
                if center.len() != group.dim() {
                    return Err(Error::DimensionMismatch { expected: group.dim(), got: center.len() });
                }
                if !(0.0 < *inner && inner < outer && *outer < 1.0) {
                    return Err(Error::InvalidParameter("annulus radii must satisfy 0 < inner < outer < 1".into()));
                }
                Box::new(AnnulusExtremal { center: center.clone(), inner: *inner, outer: *outer, metric: *metric })
            }
            DensitySpec::RingTest { center, inner, outer, eta } => {
                let c = QuotientPoint::new(center.build(group.dim())?, group.clone())?;
                Box::new(RingTestDensity::new(c, *inner, *outer, *eta, max_word_len)?)
            }
            DensitySpec::LogEOverR => Box::new(Radial { name: "log_e_over_r", f: |r| (std::f64::consts::E / r).ln() }),
            DensitySpec::InverseNorm => Box::new(Radial { name: "inverse_norm", f: |r| 1.0 / r }),
        })
    }
}
