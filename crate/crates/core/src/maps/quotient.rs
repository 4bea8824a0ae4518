//! Maps between quotients `B^n/G → B^n/G_*`, given on ball representatives
//! together with smooth local representatives for dilatations.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::group::GroupPresentation;
use crate::mobius::{self, hyp_dist, MobiusMap, Point};
use crate::quotient::{normal_neighborhood, projected_pseudo_dist, QuotientPoint};
use crate::region::Region;

use super::radial::{fm_chart_radius, RadialExample};
use super::{inner_dilatation, jacobian, outer_dilatation, Conjugated, IdentityMap, LinearMap, SmoothMap};

pub trait QuotientMap: Send + Sync {
    fn source(&self) -> &Arc<GroupPresentation>;

    fn target(&self) -> &Arc<GroupPresentation>;

    /// A ball representative of `f(π(z))`.
    fn apply_rep(&self, z: &Point) -> Result<Point>;

    /// Smooth `F` defined near `z` with `π_* ∘ F = f ∘ π` there.
    fn local(&self, z: &Point) -> Result<Box<dyn SmoothMap + '_>>;

    /// A representative of `f^{-1}(π_*(y))`, for homeomorphisms.
    fn inverse_rep(&self, _y: &Point) -> Option<Result<Point>> {
        None
    }

    /// Exact image of a region given in source ball coordinates, when the
    /// map knows it.
    fn image_region(&self, _region: &Region) -> Option<Region> {
        None
    }

    fn describe(&self) -> String;

    fn apply(&self, p: &QuotientPoint) -> Result<QuotientPoint> {
        if !Arc::ptr_eq(p.group(), self.source()) {
            return Err(Error::GroupMismatch);
        }
        QuotientPoint::new(self.apply_rep(p.rep())?, self.target().clone())
    }
}

/// `K_I(p, f) = K_I(φ(p), F)` through the local representative at `rep(p)`.
pub fn chart_inner_dilatation(f: &dyn QuotientMap, p: &QuotientPoint) -> Result<ExtReal> {
    let local = f.local(p.rep())?;
    Ok(inner_dilatation(&jacobian(local.as_ref(), p.rep().coords(), None)?))
}

pub fn chart_outer_dilatation(f: &dyn QuotientMap, p: &QuotientPoint) -> Result<ExtReal> {
    let local = f.local(p.rep())?;
    Ok(outer_dilatation(&jacobian(local.as_ref(), p.rep().coords(), None)?))
}

#[derive(Debug, Clone)]
pub struct IdentityQuotientMap {
    group: Arc<GroupPresentation>,
}

impl IdentityQuotientMap {
    pub fn new(group: Arc<GroupPresentation>) -> Self {
        IdentityQuotientMap { group }
    }
}

impl QuotientMap for IdentityQuotientMap {
    fn source(&self) -> &Arc<GroupPresentation> {
        &self.group
    }
    fn target(&self) -> &Arc<GroupPresentation> {
        &self.group
    }
    fn apply_rep(&self, z: &Point) -> Result<Point> {
        Ok(z.clone())
    }
    fn local(&self, _: &Point) -> Result<Box<dyn SmoothMap + '_>> {
        Ok(Box::new(IdentityMap(self.group.dim())))
    }
    fn inverse_rep(&self, y: &Point) -> Option<Result<Point>> {
        Some(Ok(y.clone()))
    }
    fn image_region(&self, region: &Region) -> Option<Region> {
        Some(region.clone())
    }
    fn describe(&self) -> String {
        "identity".into()
    }
}

/// The quotient map induced by a Möbius `m` from `B^n/G` to `B^n/(m G m^{-1})`.
#[derive(Debug, Clone)]
pub struct MobiusQuotientMap {
    map: MobiusMap,
    source: Arc<GroupPresentation>,
    target: Arc<GroupPresentation>,
}

impl MobiusQuotientMap {
    /// Target group generated by the conjugates `m g m^{-1}`.
    pub fn new(source: Arc<GroupPresentation>, map: MobiusMap) -> Result<Self> {
        map.validate()?;
        let inv = map.inverse();
        let gens = source.generators().iter().map(|g| map.compose(g).compose(&inv)).collect();
        let target = Arc::new(GroupPresentation::new(source.dim(), format!("{}^m", source.label()), gens)?);
        Ok(MobiusQuotientMap { map, source, target })
    }

    pub fn map(&self) -> &MobiusMap {
        &self.map
    }
}

impl QuotientMap for MobiusQuotientMap {
    fn source(&self) -> &Arc<GroupPresentation> {
        &self.source
    }
    fn target(&self) -> &Arc<GroupPresentation> {
        &self.target
    }
    fn apply_rep(&self, z: &Point) -> Result<Point> {
        Ok(self.map.apply(z))
    }
    fn local(&self, _: &Point) -> Result<Box<dyn SmoothMap + '_>> {
        Ok(Box::new(self.map.clone()))
    }
    fn inverse_rep(&self, y: &Point) -> Option<Result<Point>> {
        Some(Ok(self.map.inverse().apply(y)))
    }
    fn image_region(&self, region: &Region) -> Option<Region> {
        Some(Region::Transformed { map: self.map.clone(), region: Box::new(region.clone()) })
    }
    fn describe(&self) -> String {
        SmoothMap::describe(&self.map)
    }
}

/// A linear map in the chart centred at `center`: `T^{-1} ∘ A ∘ T` with
/// `T` the translation taking `center` to 0. Defined where the image stays
/// in the ball.
#[derive(Debug, Clone)]
pub struct ChartLinearMap {
    group: Arc<GroupPresentation>,
    center: Point,
    linear: LinearMap,
    inverse: LinearMap,
    to_chart: MobiusMap,
    from_chart: MobiusMap,
}

impl ChartLinearMap {
    pub fn new(group: Arc<GroupPresentation>, center: Point, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != group.dim() || center.dim() != group.dim() {
            return Err(Error::DimensionMismatch { expected: group.dim(), got: matrix.nrows() });
        }
        let inverse = matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidParameter("chart linear map must be invertible".into()))?;
        let to_chart = mobius::make_translation_to_origin(&center);
        let from_chart = to_chart.inverse();
        Ok(ChartLinearMap {
            group,
            center,
            linear: LinearMap::new(matrix)?,
            inverse: LinearMap::new(inverse)?,
            to_chart,
            from_chart,
        })
    }

    fn through(&self, lin: &LinearMap, z: &Point) -> Result<Point> {
        let y = lin.apply(&self.to_chart.apply_coords(z.coords()))?;
        if mobius::norm(&y) >= 1.0 - mobius::BOUNDARY_GUARD {
            return Err(Error::OutsideBall { norm: mobius::norm(&y) });
        }
        Ok(Point::from_image(self.from_chart.apply_coords(&y)))
    }
}

impl QuotientMap for ChartLinearMap {
    fn source(&self) -> &Arc<GroupPresentation> {
        &self.group
    }
    fn target(&self) -> &Arc<GroupPresentation> {
        &self.group
    }
    fn apply_rep(&self, z: &Point) -> Result<Point> {
        self.through(&self.linear, z)
    }
    fn local(&self, _: &Point) -> Result<Box<dyn SmoothMap + '_>> {
        Ok(Box::new(Conjugated { pre: self.to_chart.clone(), inner: self.linear.clone(), post: self.from_chart.clone() }))
    }
    fn inverse_rep(&self, y: &Point) -> Option<Result<Point>> {
        Some(self.through(&self.inverse, y))
    }
    /// Half-space descriptions map exactly when the chart is centred at 0.
    fn image_region(&self, region: &Region) -> Option<Region> {
        if self.center.norm() != 0.0 {
            return None;
        }
        fn go(r: &Region, inv_t: &DMatrix<f64>) -> Option<Region> {
            Some(match r {
                Region::HalfSpace { normal, offset } => Region::HalfSpace {
                    normal: (inv_t * nalgebra::DVector::from_column_slice(normal)).iter().copied().collect(),
                    offset: *offset,
                },
                Region::Intersection { regions } => {
                    Region::Intersection { regions: regions.iter().map(|r| go(r, inv_t)).collect::<Option<_>>()? }
                }
                Region::Complement { region } => Region::Complement { region: Box::new(go(region, inv_t)?) },
                Region::Empty => Region::Empty,
                _ => return None,
            })
        }
        go(region, &self.inverse.matrix().transpose())
    }
    fn describe(&self) -> String {
        format!("chart_linear({:?}, {})", self.center.coords(), self.linear.describe())
    }
}

/// `g̃_m` inside `B(0, r0')`, identity outside.
#[derive(Debug, Clone, Copy)]
struct FmChart(RadialExample);

impl SmoothMap for FmChart {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        if mobius::norm(y) < self.0.scale() {
            self.0.apply(y)
        } else {
            Ok(y.to_vec())
        }
    }
    fn analytic_jacobian(&self, y: &[f64]) -> Option<DMatrix<f64>> {
        if mobius::norm(y) < self.0.scale() {
            self.0.analytic_jacobian(y)
        } else {
            Some(DMatrix::identity(y.len(), y.len()))
        }
    }
    fn describe(&self) -> String {
        self.0.describe()
    }
}

/// `f_m = π ∘ g̃_m ∘ φ` on `B̃(p0, r0)` and the identity elsewhere, with `φ`
/// the chart `T_{rep(p0)}` onto `B(0, r0')`.
#[derive(Debug, Clone)]
pub struct FmMap {
    p0: QuotientPoint,
    r0: f64,
    radial: RadialExample,
    to_chart: MobiusMap,
    from_chart: MobiusMap,
    max_word_len: usize,
}

/// Builds `f_m`; `r0` must be below the normal-neighbourhood radius at `p0`.
pub fn build_fm_family(p0: &QuotientPoint, r0: f64, alpha: f64, m: u32, max_word_len: usize) -> Result<FmMap> {
    let nbhd = normal_neighborhood(p0, max_word_len)?;
    if !(r0 > 0.0 && r0 < nbhd.radius) {
        return Err(Error::InvalidParameter(format!(
            "r0 = {r0} must lie in (0, {}) , the normal-neighbourhood radius",
            nbhd.radius
        )));
    }
    FmMap::new_unchecked(p0, r0, alpha, m, max_word_len)
}

impl FmMap {
    /// Skips the neighbourhood check; callers vouch for `r0`.
    pub fn new_unchecked(p0: &QuotientPoint, r0: f64, alpha: f64, m: u32, max_word_len: usize) -> Result<Self> {
        let radial = RadialExample::scaled(p0.rep().dim(), alpha, m, fm_chart_radius(r0))?;
        let to_chart = mobius::make_translation_to_origin(p0.rep());
        let from_chart = to_chart.inverse();
        Ok(FmMap { p0: p0.clone(), r0, radial, to_chart, from_chart, max_word_len })
    }

    pub fn p0(&self) -> &QuotientPoint {
        &self.p0
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn radial(&self) -> &RadialExample {
        &self.radial
    }

    /// Chart coordinate `φ(p)` of a ball point lifted next to `rep(p0)`.
    pub fn chart_coords(&self, z: &Point) -> Vec<f64> {
        self.to_chart.apply_coords(z.coords())
    }

    /// Word `w` with `w(z)` the lift of `π(z)` inside `B_h(rep(p0), r0)`, if any.
    fn lift(&self, z: &Point) -> Result<Option<(Vec<i32>, Point)>> {
        let c = self.p0.rep();
        if hyp_dist(z, c) < self.r0 {
            return Ok(Some((Vec::new(), z.clone())));
        }
        let g = self.p0.group();
        if g.is_trivial() {
            return Ok(None);
        }
        let d = projected_pseudo_dist(z, c, g, self.max_word_len)?;
        Ok((d.value < self.r0).then_some((d.word, d.lifted)))
    }

    fn chart_image(&self, w: &Point) -> Result<Point> {
        let y = self.radial.apply(&self.to_chart.apply_coords(w.coords()))?;
        Ok(Point::from_image(self.from_chart.apply_coords(&y)))
    }
}

impl QuotientMap for FmMap {
    fn source(&self) -> &Arc<GroupPresentation> {
        self.p0.group()
    }
    fn target(&self) -> &Arc<GroupPresentation> {
        self.p0.group()
    }
    fn apply_rep(&self, z: &Point) -> Result<Point> {
        match self.lift(z)? {
            Some((_, w)) => self.chart_image(&w),
            None => Ok(z.clone()),
        }
    }
    fn local(&self, z: &Point) -> Result<Box<dyn SmoothMap + '_>> {
        let Some((word, _)) = self.lift(z)? else {
            return Ok(Box::new(IdentityMap(z.dim())));
        };
        let pre = self.to_chart.compose(&self.p0.group().word_map(&word));
        Ok(Box::new(Conjugated { pre, inner: FmChart(self.radial), post: self.from_chart.clone() }))
    }
    fn inverse_rep(&self, y: &Point) -> Option<Result<Point>> {
        // g̃_m maps B(0, r0') onto itself, so the same lift test applies
        Some(self.lift(y).and_then(|l| match l {
            Some((_, w)) => {
                let x = self.radial.inverse().apply(&self.to_chart.apply_coords(w.coords()))?;
                Ok(Point::from_image(self.from_chart.apply_coords(&x)))
            }
            None => Ok(y.clone()),
        }))
    }
    /// Rings and balls about `rep(p0)` inside the quotient ball map to rings
    /// and balls with radii pushed through the radial profile.
    fn image_region(&self, region: &Region) -> Option<Region> {
        let c = self.p0.rep().coords();
        let push = |r: f64| mobius::hyperbolic_radius(self.radial.profile(mobius::euclidean_radius(r)).0);
        let centred = |center: &Vec<f64>| mobius::dist_sq(center, c) < 1e-24;
        match region {
            Region::HypBall { center, radius } if centred(center) && *radius <= self.r0 => {
                Some(Region::HypBall { center: center.clone(), radius: push(*radius) })
            }
            Region::HypAnnulus { center, inner, outer } if centred(center) && *outer <= self.r0 => {
                Some(Region::HypAnnulus { center: center.clone(), inner: push(*inner), outer: push(*outer) })
            }
            Region::EuclideanAnnulus { center, inner, outer }
                if centred(center) && mobius::norm(c) == 0.0 && *outer <= self.radial.scale() =>
            {
                Some(Region::EuclideanAnnulus {
                    center: center.clone(),
                    inner: self.radial.profile(*inner).0,
                    outer: self.radial.profile(*outer).0,
                })
            }
            _ => None,
        }
    }
    fn describe(&self) -> String {
        format!(
            "fm_family(p0={:?}, r0={}, alpha={}, m={})",
            self.p0.rep().coords(),
            self.r0,
            self.radial.alpha(),
            self.radial.m()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::make_cyclic_translation;
    use crate::quotient::{quotient_dist, DEFAULT_MAX_WORD_LEN};
    use crate::rng;

    fn cyclic() -> Arc<GroupPresentation> {
        Arc::new(make_cyclic_translation(2, 1.0).unwrap())
    }

    fn qp(g: &Arc<GroupPresentation>, c: Vec<f64>) -> QuotientPoint {
        QuotientPoint::new(Point::new(c).unwrap(), g.clone()).unwrap()
    }

    #[test]
    fn fm_examples() {
        let g = cyclic();
        let p0 = qp(&g, vec![0.0, 0.0]);
        let f = build_fm_family(&p0, 0.4, 2.0, 4, DEFAULT_MAX_WORD_LEN).unwrap();
        // outside the quotient ball, and on its boundary sphere, nothing moves
        let out = Point::on_axis(2, 0.5);
        assert_eq!(f.apply_rep(&out).unwrap(), out);
        let edge = Point::new(vec![0.0, fm_chart_radius(0.4)]).unwrap();
        assert!(mobius::dist_sq(f.apply_rep(&edge).unwrap().coords(), edge.coords()).sqrt() < 1e-12);
        // a translate of an inner point maps onto the same quotient point
        let x = Point::new(vec![0.05, 0.1]).unwrap();
        let moved = g.apply_word(&[1], &x);
        let a = f.apply(&qp(&g, x.coords().to_vec())).unwrap();
        let b = f.apply(&qp(&g, moved.coords().to_vec())).unwrap();
        assert!(quotient_dist(&a, &b, 12).unwrap().value < 1e-9);
        assert!(build_fm_family(&p0, 0.5, 2.0, 4, 12).is_err());
    }

    #[test]
    fn fm_dilatation_bound() {
        let g = cyclic();
        let p0 = qp(&g, vec![0.0, 0.0]);
        let f = build_fm_family(&p0, 0.4, 2.0, 4, 12).unwrap();
        let r = fm_chart_radius(0.4);
        let mut rng = rng::stream(5, 0);
        for _ in 0..500 {
            let x = rng::uniform_in_ball(&mut rng, 2, r * 0.999);
            let p = qp(&g, x.clone());
            let ki = chart_inner_dilatation(&f, &p).unwrap().to_f64();
            // scaled chart coordinate: the h_m bound at x / r0'
            let q = 2.0 * (std::f64::consts::E / (mobius::norm(&x) / r)).ln();
            assert!(ki <= q * (1.0 + 1e-6), "{ki} > {q}");
            let hm = RadialExample::new(2, 2.0, 4).unwrap();
            let scaled: Vec<f64> = x.iter().map(|c| c / r).collect();
            let expect = inner_dilatation(&hm.analytic_jacobian(&scaled).unwrap()).to_f64();
            assert!((ki - expect).abs() < 1e-9 * expect);
        }
    }

    #[test]
    fn chart_changes_leave_dilatation_unchanged() {
        let g = cyclic();
        let p0 = qp(&g, vec![0.1, 0.05]);
        let f = build_fm_family(&p0, 0.3, 2.0, 2, 12).unwrap();
        let mut rng = rng::stream(6, 0);
        let mut worst = 0.0f64;
        for i in 0..100 {
            let z = Point::from_image(
                mobius::translation_from_origin(p0.rep())
                    .apply_coords(&rng::uniform_in_ball(&mut rng, 2, fm_chart_radius(0.3) * 0.99)),
            );
            let base = chart_inner_dilatation(&f, &qp(&g, z.coords().to_vec())).unwrap().to_f64();
            // another representative of the same point, and a group element after F
            let w: Vec<i32> = if i % 2 == 0 { vec![1, 1] } else { vec![-1] };
            let z2 = g.apply_word(&w, &z);
            let local = f.local(&z2).unwrap();
            let post = g.word_map(&[1]);
            struct After<'a>(&'a dyn SmoothMap, MobiusMap);
            impl SmoothMap for After<'_> {
                fn dim(&self) -> usize {
                    self.0.dim()
                }
                fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
                    Ok(self.1.apply_coords(&self.0.apply(x)?))
                }
                fn analytic_jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
                    Some(self.1.jacobian(&self.0.apply(x).ok()?) * self.0.analytic_jacobian(x)?)
                }
                fn describe(&self) -> String {
                    String::new()
                }
            }
            let j = jacobian(&After(local.as_ref(), post), z2.coords(), None).unwrap();
            worst = worst.max((inner_dilatation(&j).to_f64() - base).abs());
        }
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn maps_are_well_defined_on_orbits() {
        let g = cyclic();
        let mq = MobiusQuotientMap::new(g.clone(), mobius::translation_from_origin(&Point::on_axis(2, 0.3))).unwrap();
        let p0 = qp(&g, vec![0.0, 0.0]);
        let fm = build_fm_family(&p0, 0.4, 2.0, 2, 12).unwrap();
        let id = IdentityQuotientMap::new(g.clone());
        let maps: Vec<&dyn QuotientMap> = vec![&mq, &fm, &id];
        let words = g.enumerate_words(3).unwrap();
        let mut rng = rng::stream(7, 0);
        for f in maps {
            for _ in 0..20 {
                let z = Point::from_image(rng::uniform_in_ball(&mut rng, 2, 0.6));
                let fz = f.apply(&qp(&g, z.coords().to_vec())).unwrap();
                for w in words.iter().take(7) {
                    let gz = g.apply_word(w, &z);
                    let fgz = f.apply(&qp(&g, gz.coords().to_vec())).unwrap();
                    assert!(quotient_dist(&fz, &fgz, 12).unwrap().value < 1e-6, "{}", f.describe());
                }
            }
        }
    }

    #[test]
    fn inverses_and_images() {
        let g = cyclic();
        let p0 = qp(&g, vec![0.0, 0.0]);
        let f = build_fm_family(&p0, 0.4, 2.0, 8, 12).unwrap();
        let mut rng = rng::stream(8, 0);
        for _ in 0..200 {
            let z = Point::from_image(rng::uniform_in_ball(&mut rng, 2, 0.5));
            let back = f.inverse_rep(&f.apply_rep(&z).unwrap()).unwrap().unwrap();
            let a = qp(&g, back.coords().to_vec());
            assert!(quotient_dist(&a, &qp(&g, z.coords().to_vec()), 12).unwrap().value < 1e-9);
        }
        let ring = Region::HypAnnulus { center: vec![0.0, 0.0], inner: 0.1, outer: 0.38 };
        let img = f.image_region(&ring).unwrap();
        for _ in 0..500 {
            let z = Point::from_image(rng::uniform_in_ball(&mut rng, 2, 0.25));
            let fz = f.apply_rep(&z).unwrap();
            assert_eq!(ring.contains(z.coords()), img.contains(fz.coords()));
        }
        let lin = ChartLinearMap::new(g.clone(), Point::origin(2), DMatrix::from_diagonal_element(2, 2, 1.0)).unwrap();
        assert!(lin.image_region(&ring).is_none());
    }
}
