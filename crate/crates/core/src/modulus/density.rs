//! Density fields: nonnegative functions on the ball, and on the quotient
//! through representatives.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobius::{self, Point};
use crate::quotient::{quotient_dist, QuotientPoint};

use super::{GridBox, Metric};

/// Rounding allowance on ring boundaries.
const RING_SLACK: f64 = 1e-12;

pub trait DensityField: Send + Sync {
    fn eval(&self, x: &Point) -> Result<f64>;

    /// Short description embedded in report fingerprints.
    fn describe(&self) -> String {
        "custom".into()
    }
}

impl<D: DensityField + ?Sized> DensityField for Arc<D> {
    fn eval(&self, x: &Point) -> Result<f64> {
        (**self).eval(x)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl<D: DensityField + ?Sized> DensityField for Box<D> {
    fn eval(&self, x: &Point) -> Result<f64> {
        (**self).eval(x)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// Density from a closure.
pub struct FnDensity<F> {
    f: F,
}

impl<F: Fn(&Point) -> f64 + Send + Sync> FnDensity<F> {
    pub fn new(f: F) -> Self {
        FnDensity { f }
    }
}

impl<F> fmt::Debug for FnDensity<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnDensity")
    }
}

impl<F: Fn(&Point) -> f64 + Send + Sync> DensityField for FnDensity<F> {
    fn eval(&self, x: &Point) -> Result<f64> {
        Ok((self.f)(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantDensity(pub f64);

impl DensityField for ConstantDensity {
    fn eval(&self, _: &Point) -> Result<f64> {
        Ok(self.0)
    }

    fn describe(&self) -> String {
        format!("constant({})", self.0)
    }
}

/// Converts a Euclidean density value at `x` to the hyperbolic one with the
/// same line integrals: `ρ_h = ρ_E (1 - |x|^2) / 2`.
pub fn to_metric(value: f64, x: &[f64], metric: Metric) -> f64 {
    match metric {
        Metric::Euclidean => value,
        Metric::Hyperbolic => value / mobius::conformal_factor(x),
    }
}

/// Extremal density `1 / (|x - c| log(r2/r1))` of the spherical ring
/// `r1 <= |x - c| <= r2`, zero outside; expressed for the chosen metric.
/// The ring is closed so that trapezoid sums along radial paths do not lose
/// their end intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusExtremal {
    pub center: Vec<f64>,
    pub inner: f64,
    pub outer: f64,
    pub metric: Metric,
}

impl DensityField for AnnulusExtremal {
    fn eval(&self, x: &Point) -> Result<f64> {
        let r = mobius::dist_sq(x.coords(), &self.center).sqrt();
        if !(self.inner * (1.0 - RING_SLACK) <= r && r <= self.outer * (1.0 + RING_SLACK)) {
            return Ok(0.0);
        }
        let v = 1.0 / (r * (self.outer / self.inner).ln());
        Ok(to_metric(v, x.coords(), self.metric))
    }

    fn describe(&self) -> String {
        format!("annulus_extremal({:?}, {}, {}, {:?})", self.center, self.inner, self.outer, self.metric)
    }
}

/// One-dimensional weight of a ring test density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Eta {
    /// `1 / (r2 - r1)`.
    Uniform,
    /// `1 / (t log(r2 / r1))`.
    Log,
    Constant { value: f64 },
}

impl Eta {
    pub fn eval(&self, t: f64, r1: f64, r2: f64) -> f64 {
        match self {
            Eta::Uniform => 1.0 / (r2 - r1),
            Eta::Log => 1.0 / (t * (r2 / r1).ln()),
            Eta::Constant { value } => *value,
        }
    }

    /// `∫_{r1}^{r2} η(t) dt` by composite Simpson.
    pub fn integral(&self, r1: f64, r2: f64) -> f64 {
        let m = 2000;
        let h = (r2 - r1) / m as f64;
        let mut s = self.eval(r1, r1, r2) + self.eval(r2, r1, r2);
        for i in 1..m {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * self.eval(r1 + i as f64 * h, r1, r2);
        }
        s * h / 3.0
    }
}

/// `ρ(p) = η(h̃(p, p0))` on the closed quotient ring `r1 <= h̃(p, p0) <= r2`, zero
/// elsewhere. Values are per unit of quotient length.
#[derive(Debug, Clone)]
pub struct RingTestDensity {
    center: QuotientPoint,
    r1: f64,
    r2: f64,
    eta: Eta,
    max_word_len: usize,
}

impl RingTestDensity {
    pub fn new(center: QuotientPoint, r1: f64, r2: f64, eta: Eta, max_word_len: usize) -> Result<Self> {
        if !(0.0 < r1 && r1 < r2 && r2.is_finite()) {
            return Err(Error::InvalidParameter("ring radii must satisfy 0 < r1 < r2".into()));
        }
        let integral = eta.integral(r1, r2);
        if integral < 1.0 - 1e-6 {
            return Err(Error::Normalization { integral });
        }
        let mut t = r1;
        while t <= r2 {
            if !(eta.eval(t, r1, r2) >= 0.0) {
                return Err(Error::InvalidParameter("eta must be nonnegative".into()));
            }
            t += (r2 - r1) / 64.0;
        }
        Ok(RingTestDensity { center, r1, r2, eta, max_word_len })
    }

    pub fn radii(&self) -> (f64, f64) {
        (self.r1, self.r2)
    }
}

impl DensityField for RingTestDensity {
    fn eval(&self, x: &Point) -> Result<f64> {
        let p = QuotientPoint::new(x.clone(), self.center.group().clone())?;
        let t = quotient_dist(&self.center, &p, self.max_word_len)?.value;
        Ok(if self.r1 - RING_SLACK <= t && t <= self.r2 + RING_SLACK { self.eta.eval(t, self.r1, self.r2) } else { 0.0 })
    }

    fn describe(&self) -> String {
        format!("ring_test({:?}, {}, {}, {:?})", self.center.rep().coords(), self.r1, self.r2, self.eta)
    }
}

/// Piecewise constant density on a Cartesian grid, zero outside the box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridDensity {
    pub grid: GridBox,
    pub values: Vec<f64>,
}

impl DensityField for GridDensity {
    fn eval(&self, x: &Point) -> Result<f64> {
        Ok(self.grid.cell_of(x.coords()).map_or(0.0, |c| self.values[c]))
    }

    fn describe(&self) -> String {
        format!("grid({}^{})", self.grid.resolution, self.grid.lo.len())
    }
}
