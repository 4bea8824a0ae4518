//! Sampled paths in the ball or in the quotient: hyperbolic and quotient
//! length, normal representation and line integrals of densities.
//!
//! A path is the polyline through its samples. Refinement bisects Euclidean
//! segments until every hyperbolic gap is below a threshold, so chord sums
//! increase towards the length of the polyline.

use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::group::GroupPresentation;
use crate::mobius::{hyp_dist, Point};
use crate::modulus::DensityField;
use crate::quotient::projected_pseudo_dist;

/// Default hyperbolic gap after refinement.
pub const DEFAULT_GAP: f64 = 1e-3;

#[derive(Debug, Clone)]
pub enum PathSpace {
    Ball,
    Quotient(Arc<GroupPresentation>),
}

#[derive(Debug, Clone)]
pub struct SampledPath {
    params: Vec<f64>,
    points: Vec<Point>,
    space: PathSpace,
}

/// Paths serialize as rows `[t, x_1, ..., x_n]`.
impl Serialize for SampledPath {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathLength {
    pub value: f64,
    /// False if some quotient gap came from a search that did not close.
    pub complete: bool,
}

impl SampledPath {
    pub fn new(params: Vec<f64>, points: Vec<Point>, space: PathSpace) -> Result<Self> {
        if params.len() != points.len() {
            return Err(Error::InvalidParameter("params and points differ in length".into()));
        }
        if points.len() < 2 {
            return Err(Error::InvalidParameter("a path needs at least two samples".into()));
        }
        if params.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("params must be strictly increasing".into()));
        }
        let dim = points[0].dim();
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
        }
        if let PathSpace::Quotient(g) = &space {
            if g.dim() != dim {
                return Err(Error::DimensionMismatch { expected: g.dim(), got: dim });
            }
        }
        Ok(SampledPath { params, points, space })
    }

    /// Samples `f` at `samples` equally spaced parameters in `[t0, t1]`.
    pub fn from_fn<F>(f: F, t0: f64, t1: f64, samples: usize, space: PathSpace) -> Result<Self>
    where
        F: Fn(f64) -> Result<Point>,
    {
        let samples = samples.max(2);
        let params: Vec<f64> = (0..samples).map(|i| t0 + (t1 - t0) * i as f64 / (samples - 1) as f64).collect();
        let points = params.iter().map(|&t| f(t)).collect::<Result<_>>()?;
        Self::new(params, points, space)
    }

    /// Samples `f` adaptively: intervals are bisected in the parameter until
    /// consecutive samples are within hyperbolic distance `gap`.
    pub fn from_fn_adaptive<F>(f: F, t0: f64, t1: f64, gap: f64, space: PathSpace) -> Result<Self>
    where
        F: Fn(f64) -> Result<Point>,
    {
        let mut params = vec![t0];
        let mut points = vec![f(t0)?];
        let mut stack = vec![(t1, f(t1)?)];
        while let Some((t, p)) = stack.pop() {
            let (ta, pa) = (*params.last().unwrap(), points.last().unwrap().clone());
            if hyp_dist(&pa, &p) > gap && t - ta > 1e-12 * (t1 - t0).abs().max(1.0) {
                let tm = 0.5 * (ta + t);
                stack.push((t, p));
                stack.push((tm, f(tm)?));
            } else {
                params.push(t);
                points.push(p);
            }
        }
        Self::new(params, points, space)
    }

    /// Euclidean segment from `a` to `b` with `samples` points.
    pub fn segment(a: &Point, b: &Point, samples: usize, space: PathSpace) -> Result<Self> {
        Self::from_fn(
            |t| Ok(Point::from_image(a.coords().iter().zip(b.coords()).map(|(x, y)| x + t * (y - x)).collect())),
            0.0,
            1.0,
            samples,
            space,
        )
    }

    /// Circle of the given radius about the origin in the plane of the first
    /// two coordinates.
    pub fn circle(dim: usize, radius: f64, samples: usize, space: PathSpace) -> Result<Self> {
        Self::from_fn(
            |t| {
                let mut c = vec![0.0; dim];
                c[0] = radius * t.cos();
                c[1] = radius * t.sin();
                Point::new(c)
            },
            0.0,
            std::f64::consts::TAU,
            samples,
            space,
        )
    }

    pub fn from_rows(rows: &[Vec<f64>], space: PathSpace) -> Result<Self> {
        let mut params = Vec::with_capacity(rows.len());
        let mut points = Vec::with_capacity(rows.len());
        for row in rows {
            if row.len() < 2 {
                return Err(Error::InvalidParameter("path rows are [t, coords...]".into()));
            }
            params.push(row[0]);
            points.push(Point::new(row[1..].to_vec())?);
        }
        Self::new(params, points, space)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.params
            .iter()
            .zip(&self.points)
            .map(|(t, p)| std::iter::once(*t).chain(p.coords().iter().copied()).collect())
            .collect()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn space(&self) -> &PathSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn start(&self) -> &Point {
        &self.points[0]
    }

    pub fn end(&self) -> &Point {
        self.points.last().unwrap()
    }

    /// Same parameters, points mapped by `f`.
    pub fn map_points<F>(&self, f: F, space: PathSpace) -> Result<Self>
    where
        F: Fn(&Point) -> Result<Point>,
    {
        let points = self.points.iter().map(f).collect::<Result<_>>()?;
        Ok(SampledPath { params: self.params.clone(), points, space })
    }

    /// Bisects segments until each hyperbolic gap is below `gap`.
    pub fn refine(&self, gap: f64) -> SampledPath {
        let mut params = vec![self.params[0]];
        let mut points = vec![self.points[0].clone()];
        for i in 1..self.points.len() {
            let mut stack = vec![(self.params[i], self.points[i].clone())];
            while let Some((tb, b)) = stack.pop() {
                let (ta, a) = (*params.last().unwrap(), points.last().unwrap());
                if gap > 0.0 && hyp_dist(a, &b) > gap && tb - ta > f64::EPSILON * tb.abs().max(1.0) {
                    let mid = Point::from_image(a.coords().iter().zip(b.coords()).map(|(x, y)| 0.5 * (x + y)).collect());
                    stack.push((tb, b));
                    stack.push((0.5 * (ta + tb), mid));
                } else {
                    params.push(tb);
                    points.push(b);
                }
            }
        }
        SampledPath { params, points, space: self.space.clone() }
    }

    fn gaps(&self, max_word_len: usize) -> Result<(Vec<f64>, bool)> {
        let mut complete = true;
        let mut gaps = Vec::with_capacity(self.points.len().saturating_sub(1));
        for w in self.points.windows(2) {
            match &self.space {
                PathSpace::Ball => gaps.push(hyp_dist(&w[0], &w[1])),
                PathSpace::Quotient(g) => {
                    let d = projected_pseudo_dist(&w[0], &w[1], g, max_word_len)?;
                    complete &= d.complete;
                    gaps.push(d.value);
                }
            }
        }
        Ok((gaps, complete))
    }

    /// Chord sum of hyperbolic gaps without refinement.
    pub fn chord_length(&self) -> f64 {
        self.points.windows(2).map(|w| hyp_dist(&w[0], &w[1])).sum()
    }

    /// Hyperbolic length of the lift, after refinement to [`DEFAULT_GAP`].
    pub fn hyp_length(&self) -> f64 {
        self.hyp_length_with(DEFAULT_GAP)
    }

    pub fn hyp_length_with(&self, gap: f64) -> f64 {
        self.refine(gap).chord_length()
    }

    /// Partition sum of quotient gaps after refinement to [`DEFAULT_GAP`].
    pub fn quotient_length(&self, max_word_len: usize) -> Result<PathLength> {
        if matches!(self.space, PathSpace::Ball) {
            return Err(Error::InvalidParameter("quotient_length needs a quotient path".into()));
        }
        let (gaps, complete) = self.refine(DEFAULT_GAP).gaps(max_word_len)?;
        Ok(PathLength { value: gaps.iter().sum(), complete })
    }

    /// Length in the path's own space: hyperbolic for ball paths, quotient
    /// for quotient paths.
    pub fn length(&self, max_word_len: usize) -> Result<PathLength> {
        match self.space {
            PathSpace::Ball => Ok(PathLength { value: self.hyp_length(), complete: true }),
            PathSpace::Quotient(_) => self.quotient_length(max_word_len),
        }
    }

    /// Cumulative lengths at the samples (no refinement).
    pub fn length_function(&self, max_word_len: usize) -> Result<(LengthFunction, bool)> {
        let (gaps, complete) = self.gaps(max_word_len)?;
        let mut acc = 0.0;
        let mut bp = vec![(self.params[0], 0.0)];
        for (g, t) in gaps.iter().zip(&self.params[1..]) {
            acc += g;
            bp.push((*t, acc));
        }
        Ok((LengthFunction { breakpoints: bp }, complete))
    }

    /// Arc-length reparametrization: parameters become cumulative lengths.
    /// Zero-length samples are merged; a path of zero length becomes a single
    /// point.
    pub fn normal_representation(&self, max_word_len: usize) -> Result<SampledPath> {
        let (lf, _) = self.length_function(max_word_len)?;
        let mut params = vec![0.0];
        let mut points = vec![self.points[0].clone()];
        for (i, (_, s)) in lf.breakpoints.iter().enumerate().skip(1) {
            if *s > *params.last().unwrap() {
                params.push(*s);
                points.push(self.points[i].clone());
            }
        }
        Ok(SampledPath { params, points, space: self.space.clone() })
    }

    /// Point at arc length `s` of a normal representation, by linear
    /// interpolation between samples.
    pub fn point_at(&self, t: f64) -> Point {
        let i = self.params.partition_point(|&p| p <= t);
        if i == 0 {
            return self.points[0].clone();
        }
        if i >= self.params.len() {
            return self.end().clone();
        }
        let (ta, tb) = (self.params[i - 1], self.params[i]);
        let s = (t - ta) / (tb - ta);
        let (a, b) = (&self.points[i - 1], &self.points[i]);
        Point::from_image(a.coords().iter().zip(b.coords()).map(|(x, y)| x + s * (y - x)).collect())
    }

    /// `∫_γ ρ ds`: composite trapezoid along the refined normal representation,
    /// with hyperbolic (ball) or quotient (quotient path) arc element.
    pub fn line_integral(&self, rho: &dyn DensityField, max_word_len: usize) -> Result<f64> {
        self.line_integral_with(rho, DEFAULT_GAP, max_word_len)
    }

    pub fn line_integral_with(&self, rho: &dyn DensityField, gap: f64, max_word_len: usize) -> Result<f64> {
        let nr = self.refine(gap).normal_representation(max_word_len)?;
        let vals = nr.points.iter().map(|p| rho.eval(p)).collect::<Result<Vec<f64>>>()?;
        if let Some(v) = vals.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::InvalidParameter(format!("density returned {v}; must be nonnegative")));
        }
        Ok(nr.params.windows(2).zip(vals.windows(2)).map(|(t, v)| 0.5 * (v[0] + v[1]) * (t[1] - t[0])).sum())
    }
}

/// Monotone table `t ↦ l(t)`, linear between breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthFunction {
    pub breakpoints: Vec<(f64, f64)>,
}

impl LengthFunction {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::InvalidParameter("length function needs breakpoints".into()));
        }
        if breakpoints.windows(2).any(|w| w[1].0 < w[0].0 || w[1].1 < w[0].1) {
            return Err(Error::InvalidParameter("length function must be nondecreasing".into()));
        }
        Ok(LengthFunction { breakpoints })
    }

    pub fn total(&self) -> f64 {
        self.breakpoints.last().unwrap().1
    }

    pub fn eval(&self, t: f64) -> f64 {
        interp(&self.breakpoints, t, |b| b.0, |b| b.1)
    }

    /// Smallest parameter with `l(t) = s`.
    pub fn inverse(&self, s: f64) -> f64 {
        let bp = &self.breakpoints;
        let i = bp.partition_point(|b| b.1 < s);
        if i == 0 {
            return bp[0].0;
        }
        if i >= bp.len() {
            return bp.last().unwrap().0;
        }
        let (a, b) = (bp[i - 1], bp[i]);
        if b.1 == a.1 {
            return a.0;
        }
        a.0 + (s - a.1) / (b.1 - a.1) * (b.0 - a.0)
    }

    /// `self ∘ inner`, tabulated at the breakpoints of `inner`.
    pub fn compose(&self, inner: &LengthFunction) -> LengthFunction {
        LengthFunction { breakpoints: inner.breakpoints.iter().map(|&(t, v)| (t, self.eval(v))).collect() }
    }

    /// Length correspondence `s ↦ l_image(l_source^{-1}(s))` between a path
    /// and its image sampled at the same parameters.
    pub fn correspondence(source: &LengthFunction, image: &LengthFunction) -> LengthFunction {
        LengthFunction {
            breakpoints: source.breakpoints.iter().map(|&(t, s)| (s, image.eval(t))).collect(),
        }
    }
}

fn interp<T>(table: &[T], x: f64, key: impl Fn(&T) -> f64, val: impl Fn(&T) -> f64) -> f64 {
    let i = table.partition_point(|b| key(b) <= x);
    if i == 0 {
        return val(&table[0]);
    }
    if i >= table.len() {
        return val(table.last().unwrap());
    }
    let (a, b) = (&table[i - 1], &table[i]);
    let (ka, kb) = (key(a), key(b));
    if kb == ka {
        return val(b);
    }
    val(a) + (x - ka) / (kb - ka) * (val(b) - val(a))
}
