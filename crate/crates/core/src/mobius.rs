//! Points of the unit ball, the hyperbolic metric and Möbius automorphisms.
//!
//! A [`MobiusMap`] is a chain of primitive maps (orthogonal matrices,
//! inversions in spheres orthogonal to the unit sphere, reflections in planes
//! through the origin). The chain is applied right to left, so the last
//! primitive acts first. Composition concatenates chains and no normal form
//! is ever computed.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Points must satisfy `|x| < 1 - BOUNDARY_GUARD`.
pub const BOUNDARY_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("point needs at least one coordinate".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("point coordinates must be finite".into()));
        }
        let norm = norm(&coords);
        if norm >= 1.0 - BOUNDARY_GUARD {
            return Err(Error::OutsideBall { norm });
        }
        Ok(Point(coords))
    }

    /// Wraps coordinates produced by an automorphism of the ball.
    ///
    /// Images of valid points are in the ball up to rounding; deep orbit points
    /// may sit closer to the sphere than the guard, in which case distances to
    /// them evaluate to `+inf`.
    pub(crate) fn from_image(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    /// Point on the first coordinate axis at signed hyperbolic distance `s` from 0.
    pub fn on_axis(dim: usize, s: f64) -> Self {
        let mut c = vec![0.0; dim];
        c[0] = (s / 2.0).tanh();
        Point(c)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

pub(crate) fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum()
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    norm_sq(x).sqrt()
}

pub(crate) fn dist_sq(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Hyperbolic distance between raw coordinate slices.
///
/// Uses `h = 2 asinh(|x - y| / sqrt((1 - |x|^2)(1 - |y|^2)))`, which equals
/// `log((1 + t) / (1 - t))` with `t = |x-y| / sqrt(|x-y|^2 + (1-|x|^2)(1-|y|^2))`
/// and stays accurate for nearby points. Returns `+inf` if either argument
/// has left the open ball.
pub fn hyp_dist_coords(x: &[f64], y: &[f64]) -> f64 {
    let ax = 1.0 - norm_sq(x);
    let ay = 1.0 - norm_sq(y);
    if ax <= 0.0 || ay <= 0.0 {
        return f64::INFINITY;
    }
    let d = dist_sq(x, y).sqrt();
    2.0 * (d / (ax * ay).sqrt()).asinh()
}

pub fn hyp_dist(x: &Point, y: &Point) -> f64 {
    hyp_dist_coords(&x.0, &y.0)
}

/// Membership in the open hyperbolic ball `B_h(center, radius)`.
pub fn in_hyp_ball(center: &Point, radius: f64, y: &Point) -> bool {
    hyp_dist(center, y) < radius
}

/// Euclidean radius of the hyperbolic ball of radius `r` about the origin.
pub fn euclidean_radius(r: f64) -> f64 {
    (r / 2.0).tanh()
}

/// Hyperbolic distance from the origin to a point of Euclidean norm `rho`.
pub fn hyperbolic_radius(rho: f64) -> f64 {
    2.0 * rho.atanh()
}

/// Conformal factor `2 / (1 - |x|^2)` of the hyperbolic metric.
pub fn conformal_factor(x: &[f64]) -> f64 {
    2.0 / (1.0 - norm_sq(x))
}

/// One link of a [`MobiusMap`] chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Primitive {
    /// `x -> Q x` with `Q` orthogonal, stored row-major.
    Orthogonal { matrix: Vec<Vec<f64>> },
    /// `x -> c + r^2 (x - c) / |x - c|^2`, sphere orthogonal to the unit sphere.
    Inversion { center: Vec<f64>, radius: f64 },
    /// Reflection in the hyperplane through 0 with unit normal `u`.
    Reflection { normal: Vec<f64> },
}

impl Primitive {
    pub fn dim(&self) -> usize {
        match self {
            Primitive::Orthogonal { matrix } => matrix.len(),
            Primitive::Inversion { center, .. } => center.len(),
            Primitive::Reflection { normal } => normal.len(),
        }
    }

    /// Checks that the primitive is well formed and maps the ball onto itself.
    pub fn validate(&self) -> Result<()> {
        match self {
            Primitive::Orthogonal { matrix } => {
                let n = matrix.len();
                if n == 0 || matrix.iter().any(|row| row.len() != n) {
                    return Err(Error::InvalidParameter("orthogonal matrix must be square".into()));
                }
                for i in 0..n {
                    for j in 0..n {
                        let g: f64 = (0..n).map(|k| matrix[k][i] * matrix[k][j]).sum();
                        let want = if i == j { 1.0 } else { 0.0 };
                        if (g - want).abs() > 1e-9 {
                            return Err(Error::InvalidParameter(
                                "matrix is not orthogonal to 1e-9".into(),
                            ));
                        }
                    }
                }
            }
            Primitive::Inversion { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidParameter("inversion radius must be positive".into()));
                }
                let c2 = norm_sq(center);
                let rel = (c2 - 1.0 - radius * radius).abs() / c2.max(1.0);
                if rel > 1e-9 {
                    return Err(Error::InvalidParameter(
                        "inversion sphere is not orthogonal to the unit sphere".into(),
                    ));
                }
            }
            Primitive::Reflection { normal } => {
                let n = norm(normal);
                if (n - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParameter("reflection normal must be a unit vector".into()));
                }
            }
        }
        Ok(())
    }

    fn apply_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        match self {
            Primitive::Orthogonal { matrix } => {
                out.extend(matrix.iter().map(|row| dot(row, x)));
            }
            Primitive::Inversion { center, radius } => {
                let d2 = dist_sq(x, center);
                let s = radius * radius / d2;
                out.extend(x.iter().zip(center).map(|(xi, ci)| ci + s * (xi - ci)));
            }
            Primitive::Reflection { normal } => {
                let k = 2.0 * dot(normal, x);
                out.extend(x.iter().zip(normal).map(|(xi, ui)| xi - k * ui));
            }
        }
    }

    fn inverse(&self) -> Primitive {
        match self {
            Primitive::Orthogonal { matrix } => {
                let n = matrix.len();
                let t = (0..n).map(|i| (0..n).map(|j| matrix[j][i]).collect()).collect();
                Primitive::Orthogonal { matrix: t }
            }
            other => other.clone(),
        }
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        match self {
            Primitive::Orthogonal { matrix } => DMatrix::from_fn(n, n, |i, j| matrix[i][j]),
            Primitive::Inversion { center, radius } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
                let d2 = norm_sq(&d);
                let s = radius * radius / d2;
                DMatrix::from_fn(n, n, |i, j| {
                    let id = if i == j { 1.0 } else { 0.0 };
                    s * (id - 2.0 * d[i] * d[j] / d2)
                })
            }
            Primitive::Reflection { normal } => DMatrix::from_fn(n, n, |i, j| {
                let id = if i == j { 1.0 } else { 0.0 };
                id - 2.0 * normal[i] * normal[j]
            }),
        }
    }
}

/// Automorphism of the unit ball as a right-to-left chain of primitives.
///
/// The empty chain is the identity in every dimension.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MobiusMap {
    chain: Vec<Primitive>,
}

impl MobiusMap {
    pub fn identity() -> Self {
        MobiusMap { chain: Vec::new() }
    }

    pub fn from_chain(chain: Vec<Primitive>) -> Result<Self> {
        let map = MobiusMap { chain };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        let mut dim = None;
        for p in &self.chain {
            p.validate()?;
            match dim {
                None => dim = Some(p.dim()),
                Some(d) if d != p.dim() => {
                    return Err(Error::DimensionMismatch { expected: d, got: p.dim() })
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn chain(&self) -> &[Primitive] {
        &self.chain
    }

    pub fn is_identity_chain(&self) -> bool {
        self.chain.is_empty()
    }

    /// Dimension fixed by the primitives, `None` for the identity.
    pub fn dim(&self) -> Option<usize> {
        self.chain.first().map(Primitive::dim)
    }

    pub fn orthogonal(matrix: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_chain(vec![Primitive::Orthogonal { matrix }])
    }

    pub fn reflection(normal: &[f64]) -> Result<Self> {
        let n = norm(normal);
        if n == 0.0 {
            return Err(Error::InvalidParameter("reflection normal must be nonzero".into()));
        }
        Self::from_chain(vec![Primitive::Reflection { normal: normal.iter().map(|c| c / n).collect() }])
    }

    /// Rotation by `angle` in the plane of the first two coordinates.
    pub fn rotation(dim: usize, angle: f64) -> Self {
        let mut m = vec![vec![0.0; dim]; dim];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let (s, c) = angle.sin_cos();
        m[0][0] = c;
        m[0][1] = -s;
        m[1][0] = s;
        m[1][1] = c;
        MobiusMap { chain: vec![Primitive::Orthogonal { matrix: m }] }
    }

    pub fn apply_coords(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let mut next = Vec::with_capacity(x.len());
        for p in self.chain.iter().rev() {
            p.apply_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    pub fn apply(&self, x: &Point) -> Point {
        Point::from_image(self.apply_coords(x.coords()))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        let mut chain = self.chain.clone();
        chain.extend(other.chain.iter().cloned());
        MobiusMap { chain }
    }

    pub fn inverse(&self) -> MobiusMap {
        MobiusMap { chain: self.chain.iter().rev().map(Primitive::inverse).collect() }
    }

    /// Analytic Jacobian at `x` (product of the primitive Jacobians).
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let mut jac = DMatrix::identity(n, n);
        let mut cur = x.to_vec();
        let mut next = Vec::with_capacity(n);
        for p in self.chain.iter().rev() {
            jac = p.jacobian(&cur) * jac;
            p.apply_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        jac
    }
}

/// The automorphism `T = p ∘ σ` moving `z0` to the origin.
///
/// `σ` inverts in the sphere about `z0* = z0 / |z0|^2` orthogonal to the unit
/// sphere, i.e. with radius `sqrt(|z0*|^2 - 1)`; `p` reflects in the plane
/// through 0 orthogonal to `z0`. The result is the hyperbolic translation along
/// the geodesic through 0 and `z0`; for `z0 = 0` it is the identity.
pub fn make_translation_to_origin(z0: &Point) -> MobiusMap {
    let n2 = norm_sq(z0.coords());
    if n2 == 0.0 {
        return MobiusMap::identity();
    }
    let n = n2.sqrt();
    let star: Vec<f64> = z0.coords().iter().map(|c| c / n2).collect();
    let radius = (1.0 / n2 - 1.0).sqrt();
    let normal: Vec<f64> = z0.coords().iter().map(|c| c / n).collect();
    MobiusMap {
        chain: vec![
            Primitive::Reflection { normal },
            Primitive::Inversion { center: star, radius },
        ],
    }
}

/// Hyperbolic translation taking the origin to `z0`.
pub fn translation_from_origin(z0: &Point) -> MobiusMap {
    make_translation_to_origin(z0).inverse()
}

/// Random automorphism: a few reflections followed by a translation from the
/// origin to a point of norm at most `max_norm`.
pub fn random_automorphism<R: Rng + ?Sized>(rng: &mut R, dim: usize, max_norm: f64) -> MobiusMap {
    let target = Point::from_image(rng::uniform_in_ball(rng, dim, max_norm));
    let mut chain = make_translation_to_origin(&target).inverse().chain;
    let reflections = rng.random_range(0..=dim);
    for _ in 0..reflections {
        chain.push(Primitive::Reflection { normal: rng::unit_vector(rng, dim) });
    }
    MobiusMap { chain }
}

/// Lower bound `log((1 + r/2)/(1 - r/2))` for `h(z1, z2)` with `r = |z1 - z2|`.
pub fn chordal_lower_bound(r: f64) -> f64 {
    ((1.0 + r / 2.0) / (1.0 - r / 2.0)).ln()
}

/// Numerical comparison constant `C1` with `C1 h(z1, z2) <= |z1 - z2|` on `B(0, r0)`.
///
/// Takes the infimum of `|z1 - z2| / h(z1, z2)` over a dense sample of pairs
/// (independent pairs plus near-diagonal pairs at several scales, which is
/// where the infimum lives) and removes a 1% margin.
pub fn euclidean_comparison_constant(r0: f64, dim: usize, samples: usize, seed: u64) -> Result<f64> {
    if !(r0 > 0.0 && 2.0 * r0 < 1.0) {
        return Err(Error::InvalidParameter("need 0 < 2 r0 < 1".into()));
    }
    let mut rng = rng::stream(seed, 0);
    let mut inf = f64::INFINITY;
    for i in 0..samples {
        let a = rng::uniform_in_ball(&mut rng, dim, r0);
        let b = if i % 2 == 0 {
            rng::uniform_in_ball(&mut rng, dim, r0)
        } else {
            let scale = 10f64.powi(-(1 + (i / 2 % 6) as i32));
            let dir = rng::unit_vector(&mut rng, dim);
            let mut b: Vec<f64> = a.iter().zip(&dir).map(|(x, d)| x + scale * d).collect();
            let nb = norm(&b);
            if nb >= r0 {
                b.iter_mut().for_each(|c| *c *= r0 * (1.0 - 1e-12) / nb);
            }
            b
        };
        let h = hyp_dist_coords(&a, &b);
        if h > 0.0 {
            inf = inf.min(dist_sq(&a, &b).sqrt() / h);
        }
    }
    Ok(0.99 * inf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// The distance formula exactly as printed: log((1+t)/(1-t)).
    fn hyp_dist_literal(x: &[f64], y: &[f64]) -> f64 {
        let d2 = dist_sq(x, y);
        let t = d2.sqrt() / (d2 + (1.0 - norm_sq(x)) * (1.0 - norm_sq(y))).sqrt();
        ((1.0 + t) / (1.0 - t)).ln()
    }

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    #[test]
    fn rejects_points_at_the_guard() {
        assert!(matches!(Point::new(vec![1.0, 0.0]), Err(Error::OutsideBall { .. })));
        assert!(Point::new(vec![1.0 - 1e-13, 0.0]).is_err());
        assert!(Point::new(vec![1.0 - 1e-11, 0.0]).is_ok());
        assert!(Point::new(vec![f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn distance_examples() {
        let x = p(&[0.3, -0.2]);
        assert_eq!(hyp_dist(&x, &x), 0.0);
        let d = hyp_dist(&Point::origin(3), &p(&[0.5, 0.0, 0.0]));
        assert!((d - 3f64.ln()).abs() < 1e-12);
        assert!((d - 1.0986123).abs() < 1e-7);
    }

    #[test]
    fn stable_formula_matches_literal_formula() {
        let mut r = rng::stream(1, 0);
        for _ in 0..1000 {
            let a = rng::uniform_in_ball(&mut r, 3, 0.95);
            let b = rng::uniform_in_ball(&mut r, 3, 0.95);
            let lit = hyp_dist_literal(&a, &b);
            assert!((hyp_dist_coords(&a, &b) - lit).abs() <= 1e-10 * lit.max(1.0));
        }
    }

    #[test]
    fn hyperbolic_ball_membership_is_strict() {
        let o = Point::origin(2);
        let y = p(&[0.5, 0.0]);
        assert!(in_hyp_ball(&y, 0.1, &y));
        assert!(!in_hyp_ball(&o, 1.0986, &y));
        assert!(in_hyp_ball(&o, 1.1, &y));
    }

    #[test]
    fn translation_to_origin_examples() {
        assert!(make_translation_to_origin(&Point::origin(2)).is_identity_chain());
        let z0 = p(&[0.3, 0.4]);
        let t = make_translation_to_origin(&z0);
        let img = t.apply(&z0);
        assert!(img.norm() < 1e-12, "T(z0) = {:?}", img);
        let back = t.inverse().apply(&Point::origin(2));
        assert!(dist_sq(back.coords(), z0.coords()).sqrt() < 1e-12);
    }

    #[test]
    fn translation_preserves_ball_and_distance() {
        let mut r = rng::stream(2, 0);
        for dim in [2, 3, 4] {
            let z0 = Point::from_image(rng::uniform_in_ball(&mut r, dim, 0.9));
            let t = make_translation_to_origin(&z0);
            for _ in 0..200 {
                let x = Point::from_image(rng::uniform_in_ball(&mut r, dim, 0.99));
                let y = Point::from_image(rng::uniform_in_ball(&mut r, dim, 0.99));
                let (tx, ty) = (t.apply(&x), t.apply(&y));
                assert!(tx.norm() < 1.0);
                let (a, b) = (hyp_dist(&x, &y), hyp_dist(&tx, &ty));
                assert!((a - b).abs() < 1e-9 * a.max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn translation_has_no_interior_fixed_point() {
        let z0 = p(&[0.6, 0.0]);
        let t = make_translation_to_origin(&z0);
        // the translation length along the axis is h(0, z0) > 0
        let shift = hyp_dist(&z0, &Point::origin(2));
        for i in -20..=20 {
            for j in -20..=20 {
                let c = vec![i as f64 / 21.0, j as f64 / 21.0];
                if norm(&c) < 0.999 {
                    let x = Point::from_image(c);
                    assert!(hyp_dist(&x, &t.apply(&x)) >= shift - 1e-9);
                }
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences_and_is_conformal() {
        let mut r = rng::stream(3, 0);
        let m = random_automorphism(&mut r, 3, 0.7);
        let x = rng::uniform_in_ball(&mut r, 3, 0.6);
        let jac = m.jacobian(&x);
        let h = 1e-6;
        for j in 0..3 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let (fp, fm) = (m.apply_coords(&xp), m.apply_coords(&xm));
            for i in 0..3 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!((fd - jac[(i, j)]).abs() < 1e-6 * jac.norm());
            }
        }
        let sv = jac.singular_values();
        assert!((sv.max() - sv.min()).abs() < 1e-9 * sv.max());
    }

    #[test]
    fn rotation_and_orthogonal_inverse() {
        let rot = MobiusMap::rotation(3, 0.7);
        let x = p(&[0.1, 0.2, 0.3]);
        let back = rot.inverse().apply(&rot.apply(&x));
        assert!(dist_sq(back.coords(), x.coords()) < 1e-24);
    }

    #[test]
    fn serde_round_trip_and_validation() {
        let t = make_translation_to_origin(&p(&[0.2, -0.1]));
        let json = serde_json::to_string(&t).unwrap();
        let back: MobiusMap = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
        back.validate().unwrap();
        let bad = MobiusMap::from_chain(vec![Primitive::Inversion { center: vec![2.0, 0.0], radius: 1.0 }]);
        assert!(bad.is_err());
        let mixed = MobiusMap::from_chain(vec![
            Primitive::Reflection { normal: vec![1.0, 0.0] },
            Primitive::Reflection { normal: vec![1.0, 0.0, 0.0] },
        ]);
        assert!(matches!(mixed, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn chordal_bound_dominates_identity_on_grid() {
        for i in 1..1000 {
            let r = i as f64 / 1000.0;
            assert!(chordal_lower_bound(r) >= r);
        }
    }

    #[test]
    fn comparison_constant_near_closed_form() {
        // The infimum of |dz| / h over B(0, r0) is (1 - r0^2) / 2, reached by
        // infinitesimal pairs on the sphere |z| = r0.
        let c1 = euclidean_comparison_constant(0.4, 2, 20_000, 5).unwrap();
        let exact = (1.0 - 0.16) / 2.0;
        assert!(c1 <= exact && c1 > 0.98 * exact, "C1 = {c1}");
    }

    fn ball_point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, dim).prop_map(|v| {
            let n = norm(&v);
            if n >= 0.97 {
                v.iter().map(|c| c * 0.97 / n).collect()
            } else {
                v
            }
        })
    }

    proptest! {
        #[test]
        fn metric_axioms(a in ball_point(3), b in ball_point(3), c in ball_point(3)) {
            let ab = hyp_dist_coords(&a, &b);
            let ba = hyp_dist_coords(&b, &a);
            let bc = hyp_dist_coords(&b, &c);
            let ac = hyp_dist_coords(&a, &c);
            prop_assert!((ab - ba).abs() <= 1e-9);
            prop_assert!(ab >= 0.0);
            prop_assert!(ac <= ab + bc + 1e-9);
        }

        #[test]
        fn compose_and_inverse(seed in 0u64..1000, x in ball_point(2)) {
            let mut r = rng::stream(seed, 7);
            let a = random_automorphism(&mut r, 2, 0.8);
            let b = random_automorphism(&mut r, 2, 0.8);
            let c = random_automorphism(&mut r, 2, 0.8);
            let ab_x = a.compose(&b).apply_coords(&x);
            let a_b_x = a.apply_coords(&b.apply_coords(&x));
            prop_assert!(dist_sq(&ab_x, &a_b_x).sqrt() < 1e-9);
            let back = a.inverse().apply_coords(&a.apply_coords(&x));
            prop_assert!(dist_sq(&back, &x).sqrt() < 1e-9);
            let left = a.compose(&b).compose(&c).apply_coords(&x);
            let right = a.compose(&b.compose(&c)).apply_coords(&x);
            prop_assert!(dist_sq(&left, &right).sqrt() < 1e-9);
            let id = a.compose(&MobiusMap::identity()).apply_coords(&x);
            prop_assert!(dist_sq(&id, &a.apply_coords(&x)).sqrt() < 1e-12);
        }
    }
}
