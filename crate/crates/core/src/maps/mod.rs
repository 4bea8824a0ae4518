//! Differentiable test maps, Jacobians and dilatations, and maps between
//! quotients through explicit charts.

mod quotient;
mod radial;

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::mobius::{self, MobiusMap};

pub use quotient::{
    build_fm_family, chart_inner_dilatation, chart_outer_dilatation, ChartLinearMap, FmMap, IdentityQuotientMap,
    MobiusQuotientMap, QuotientMap,
};
pub use radial::{fm_chart_radius, RadialExample};

/// Relative finite-difference step.
pub const FD_STEP: f64 = 1e-6;

pub trait SmoothMap: Send + Sync {
    fn dim(&self) -> usize;

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn analytic_jacobian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// Distance from `x` to the edge of the domain.
    fn margin(&self, x: &[f64]) -> f64 {
        1.0 - mobius::norm(x)
    }

    fn describe(&self) -> String;
}

impl<M: SmoothMap + ?Sized> SmoothMap for Box<M> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).apply(x)
    }
    fn analytic_jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        (**self).analytic_jacobian(x)
    }
    fn margin(&self, x: &[f64]) -> f64 {
        (**self).margin(x)
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl<M: SmoothMap + ?Sized> SmoothMap for Arc<M> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).apply(x)
    }
    fn analytic_jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        (**self).analytic_jacobian(x)
    }
    fn margin(&self, x: &[f64]) -> f64 {
        (**self).margin(x)
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// Step used at `x`: `FD_STEP · min(1, 1 - |x|)`.
pub fn fd_step(x: &[f64]) -> f64 {
    FD_STEP * (1.0 - mobius::norm(x)).clamp(f64::MIN_POSITIVE, 1.0)
}

/// Central differences, one column per coordinate.
pub fn finite_difference_jacobian(m: &dyn SmoothMap, x: &[f64], h: f64) -> Result<DMatrix<f64>> {
    let n = x.len();
    if m.margin(x) < 2.0 * h {
        return Err(Error::DomainProximity { margin: m.margin(x) });
    }
    let mut jac = DMatrix::zeros(m.dim(), n);
    let mut y = x.to_vec();
    for j in 0..n {
        y[j] = x[j] + h;
        let fp = m.apply(&y)?;
        y[j] = x[j] - h;
        let fm = m.apply(&y)?;
        y[j] = x[j];
        for i in 0..m.dim() {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Analytic Jacobian when the map has one, else central differences with
/// `step` (default [`fd_step`]).
pub fn jacobian(m: &dyn SmoothMap, x: &[f64], step: Option<f64>) -> Result<DMatrix<f64>> {
    if x.len() != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), got: x.len() });
    }
    let h = step.unwrap_or_else(|| fd_step(x));
    if m.margin(x) < 2.0 * h {
        return Err(Error::DomainProximity { margin: m.margin(x) });
    }
    match m.analytic_jacobian(x) {
        Some(j) => Ok(j),
        None => finite_difference_jacobian(m, x, h),
    }
}

/// Singular values in decreasing order and `|det|`.
fn spectrum(j: &DMatrix<f64>) -> (Vec<f64>, f64) {
    let mut s: Vec<f64> = j.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    let det = if j.is_square() { j.determinant().abs() } else { 0.0 };
    (s, det)
}

/// `K_I = |J| / l(f')^n`; 1 for the zero matrix, infinite for other
/// singular matrices.
pub fn inner_dilatation(j: &DMatrix<f64>) -> ExtReal {
    if j.iter().all(|v| *v == 0.0) {
        return ExtReal::Finite(1.0);
    }
    let (s, det) = spectrum(j);
    let min = *s.last().unwrap();
    if det == 0.0 || min == 0.0 {
        return ExtReal::Infinite;
    }
    ExtReal::from_f64(det / min.powi(j.ncols() as i32))
}

/// `K_O = ‖f'‖^n / |J|` with the same conventions.
pub fn outer_dilatation(j: &DMatrix<f64>) -> ExtReal {
    if j.iter().all(|v| *v == 0.0) {
        return ExtReal::Finite(1.0);
    }
    let (s, det) = spectrum(j);
    if det == 0.0 || *s.last().unwrap() == 0.0 {
        return ExtReal::Infinite;
    }
    ExtReal::from_f64(s[0].powi(j.ncols() as i32) / det)
}

/// `L(x, f)`: the operator norm of the Jacobian.
pub fn max_stretch(m: &dyn SmoothMap, x: &[f64]) -> Result<f64> {
    let j = jacobian(m, x, None)?;
    Ok(spectrum(&j).0[0])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dilatations {
    pub inner: ExtReal,
    pub outer: ExtReal,
    pub max_stretch: f64,
    pub jacobian_det: f64,
}

pub fn dilatations(m: &dyn SmoothMap, x: &[f64]) -> Result<Dilatations> {
    let j = jacobian(m, x, None)?;
    let (s, det) = spectrum(&j);
    Ok(Dilatations { inner: inner_dilatation(&j), outer: outer_dilatation(&j), max_stretch: s[0], jacobian_det: det })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityMap(pub usize);

impl SmoothMap for IdentityMap {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(x.to_vec())
    }
    fn analytic_jacobian(&self, _: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(self.0, self.0))
    }
    fn describe(&self) -> String {
        "identity".into()
    }
}

/// `x ↦ A x`. Defined on all of `R^n`; no analytic Jacobian is attached so
/// that differencing is exercised on an exactly linear map.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    matrix: DMatrix<f64>,
}

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidParameter("linear map must be square".into()));
        }
        Ok(LinearMap { matrix })
    }

    pub fn diagonal(d: &[f64]) -> Self {
        LinearMap { matrix: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)) }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl SmoothMap for LinearMap {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok((&self.matrix * nalgebra::DVector::from_column_slice(x)).iter().copied().collect())
    }
    fn margin(&self, _: &[f64]) -> f64 {
        f64::INFINITY
    }
    fn describe(&self) -> String {
        format!("linear({:?})", self.matrix.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>())
    }
}

impl SmoothMap for MobiusMap {
    fn dim(&self) -> usize {
        MobiusMap::dim(self).unwrap_or(0)
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.apply_coords(x))
    }
    fn analytic_jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        Some(self.jacobian(x))
    }
    fn describe(&self) -> String {
        format!("moebius({})", serde_json::to_string(self).unwrap_or_default())
    }
}

/// `post ∘ inner ∘ pre` with Möbius charts on both sides.
pub struct Conjugated<M> {
    pub pre: MobiusMap,
    pub inner: M,
    pub post: MobiusMap,
}

impl<M: SmoothMap> SmoothMap for Conjugated<M> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.post.apply_coords(&self.inner.apply(&self.pre.apply_coords(x))?))
    }
    fn analytic_jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let y = self.pre.apply_coords(x);
        let jin = self.inner.analytic_jacobian(&y)?;
        let z = self.inner.apply(&y).ok()?;
        Some(self.post.jacobian(&z) * jin * self.pre.jacobian(x))
    }
    fn margin(&self, x: &[f64]) -> f64 {
        // the inner map's margin, pulled back to first order
        let y = self.pre.apply_coords(x);
        let scale = mobius::conformal_factor(&y) / mobius::conformal_factor(x);
        self.inner.margin(&y) / scale
    }
    fn describe(&self) -> String {
        format!("conjugated({})", self.inner.describe())
    }
}
