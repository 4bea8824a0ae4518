//! The factor-space `B^n / G`: quotient metric, Dirichlet domains, injectivity
//! radius and normal neighbourhoods with their charts.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::group::{GroupPresentation, Word};
use crate::mobius::{hyp_dist, hyp_dist_coords, Point};
use crate::rng;

/// Word budget used when callers do not pass one.
pub const DEFAULT_MAX_WORD_LEN: usize = 12;

/// Ties within this margin of a Dirichlet bisector are reported as boundary.
pub const BISECTOR_TOL: f64 = 1e-9;

/// Distance from the origin treated as the edge of the ball when a
/// neighbourhood is not limited by the group.
const BOUNDARY_CAP_NORM: f64 = 1.0 - 1e-6;

/// An orbit `G z`, stored as the representative `z` and its group.
#[derive(Debug, Clone)]
pub struct QuotientPoint {
    rep: Point,
    group: Arc<GroupPresentation>,
}

impl Serialize for QuotientPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rep.serialize(s)
    }
}

impl QuotientPoint {
    pub fn new(rep: Point, group: Arc<GroupPresentation>) -> Result<Self> {
        group.check_point(&rep)?;
        Ok(QuotientPoint { rep, group })
    }

    pub fn rep(&self) -> &Point {
        &self.rep
    }

    pub fn group(&self) -> &Arc<GroupPresentation> {
        &self.group
    }

    pub fn dist(&self, other: &QuotientPoint, max_word_len: usize) -> Result<QuotientDistance> {
        quotient_dist(self, other, max_word_len)
    }

    /// Orbit equality up to [`crate::TOL`].
    pub fn same_orbit(&self, other: &QuotientPoint, max_word_len: usize) -> Result<bool> {
        Ok(self.dist(other, max_word_len)?.value < crate::TOL)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotientDistance {
    pub value: f64,
    /// Word `w` realizing the minimum `h(w(rep1), rep2)`.
    pub word: Word,
    /// The translate `w(rep1)`.
    pub lifted: Point,
    /// False when the word budget ran out before the search closed; `value`
    /// is then only an upper bound.
    pub complete: bool,
}

/// `h̃(p1, p2) = min_w h(w(rep1), rep2)` over freely reduced words.
pub fn quotient_dist(p1: &QuotientPoint, p2: &QuotientPoint, max_word_len: usize) -> Result<QuotientDistance> {
    if !Arc::ptr_eq(&p1.group, &p2.group) {
        return Err(Error::GroupMismatch);
    }
    projected_pseudo_dist(&p1.rep, &p2.rep, &p1.group, max_word_len)
}

/// `d(z1, z2) = h̃(π z1, π z2)`.
pub fn projected_pseudo_dist(
    z1: &Point,
    z2: &Point,
    g: &GroupPresentation,
    max_word_len: usize,
) -> Result<QuotientDistance> {
    let h = hyp_dist(z1, z2);
    // The pruning bound grows with the distance of the search center from 0,
    // so search around the nearer point: h(w z1, z2) = h(w⁻¹ z2, z1).
    let swap = z2.norm() > z1.norm();
    let (seed, center) = if swap { (z2, z1) } else { (z1, z2) };
    // the empty word already achieves h, so nothing farther matters
    let raw = g.orbit_candidates(seed, center, h, max_word_len, true)?;
    let mut best = QuotientDistance { value: h, word: Vec::new(), lifted: z1.clone(), complete: raw.complete };
    let mut best_pt = None;
    for (word, pt, d) in raw.hits {
        if d < best.value || (d == best.value && word.len() < best.word.len()) {
            best.value = d;
            best.word = word;
            best_pt = Some(pt);
        }
    }
    if swap {
        best.word = crate::group::invert_word(&best.word);
        best.lifted = g.apply_word(&best.word, z1);
    } else if let Some(pt) = best_pt {
        best.lifted = Point::from_image(pt);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalIsometry {
    /// Half the smallest displacement of a nontrivial word over the sample.
    pub radius: ExtReal,
    pub complete: bool,
}

/// Smallest `h(z, w(z))` over nontrivial words, with a completeness flag.
pub fn min_displacement(g: &GroupPresentation, z: &Point, max_word_len: usize) -> Result<(f64, bool)> {
    if g.is_trivial() || max_word_len == 0 {
        return Ok((f64::INFINITY, g.is_trivial()));
    }
    let bound = g
        .letters()
        .iter()
        .map(|&l| hyp_dist_coords(z.coords(), &g.letter_map(l).apply_coords(z.coords())))
        .fold(f64::INFINITY, f64::min);
    let raw = g.orbit_candidates(z, z, bound, max_word_len, true)?;
    let best = raw.hits.iter().filter(|(w, _, _)| !w.is_empty()).map(|h| h.2).fold(bound, f64::min);
    Ok((best, raw.complete))
}

/// Injectivity radius over a compact sample: `δ = ½ min_z min_w h(z, w(z))`.
pub fn local_isometry_radius(g: &GroupPresentation, sample: &[Point], max_word_len: usize) -> Result<LocalIsometry> {
    if sample.is_empty() {
        return Err(Error::InvalidParameter("compact sample must be nonempty".into()));
    }
    let per_point: Vec<(f64, bool)> =
        sample.par_iter().map(|z| min_displacement(g, z, max_word_len)).collect::<Result<_>>()?;
    let min = per_point.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    Ok(LocalIsometry {
        radius: ExtReal::from_f64(0.5 * min),
        complete: per_point.iter().all(|p| p.1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DirichletMembership {
    /// `h(p, p0) < h(p, w(p0))` for every nontrivial enumerated `w`.
    pub inside: bool,
    /// Some translate of `p0` ties with `p0` to within the bisector margin.
    pub boundary: bool,
    pub complete: bool,
}

/// Membership in the Dirichlet domain of the group centered at `p0`.
pub fn in_dirichlet_domain(
    g: &GroupPresentation,
    p0: &Point,
    p: &Point,
    max_word_len: usize,
) -> Result<DirichletMembership> {
    let h0 = hyp_dist(p, p0);
    if g.is_trivial() {
        return Ok(DirichletMembership { inside: true, boundary: false, complete: true });
    }
    let raw = g.orbit_candidates(p0, p, h0 + BISECTOR_TOL, max_word_len, false)?;
    let mut inside = true;
    let mut boundary = false;
    for (_, _, d) in raw.hits.iter().filter(|h| !h.0.is_empty()) {
        if *d < h0 - BISECTOR_TOL {
            inside = false;
        } else {
            boundary = true;
        }
    }
    if boundary {
        inside = false;
    }
    Ok(DirichletMembership { inside, boundary, complete: raw.complete })
}

/// Translate of `z` lying in the Dirichlet domain of `p0` (ties broken towards
/// the shorter, then lexicographically smaller word).
pub fn dirichlet_reduce(g: &GroupPresentation, p0: &Point, z: &Point, max_word_len: usize) -> Result<QuotientDistance> {
    projected_pseudo_dist(z, p0, g, max_word_len)
}

/// A chart `(B_h(rep, ε0), π^{-1})` around a quotient point.
#[derive(Debug, Clone, Serialize)]
pub struct NormalNeighborhood {
    pub center: QuotientPoint,
    pub radius: f64,
    /// True for groups whose radius was limited by the ball rather than the group.
    pub capped: bool,
    pub complete: bool,
    #[serde(skip)]
    max_word_len: usize,
}

/// Sample of the closed hyperbolic ball `B_h(c, r)`: the center plus points
/// on spheres of radius `r/2` and `r`.
pub fn hyperbolic_ball_sample(c: &Point, r: f64, count: usize, seed: u64) -> Vec<Point> {
    let dim = c.dim();
    let to_center = crate::mobius::translation_from_origin(c);
    let mut rng = rng::stream(seed, 0);
    let mut out = vec![c.clone()];
    let rad = crate::mobius::euclidean_radius(r);
    for i in 0..count {
        let dir = rng::unit_vector(&mut rng, dim);
        let scale = if i % 2 == 0 { rad } else { crate::mobius::euclidean_radius(r / 2.0) };
        let x: Vec<f64> = dir.iter().map(|d| d * scale).collect();
        out.push(Point::from_image(to_center.apply_coords(&x)));
    }
    out
}

const NEIGHBORHOOD_SAMPLES: usize = 32;
const NEIGHBORHOOD_SHRINK: f64 = 0.9;

/// Normal neighbourhood: `ε0 = 0.9 δ` with `δ` the injectivity radius over a
/// sample of `B_h(rep, ε0)` itself, iterated to a fixed point.
pub fn normal_neighborhood(p0: &QuotientPoint, max_word_len: usize) -> Result<NormalNeighborhood> {
    let g = p0.group();
    let rep = p0.rep();
    if g.is_trivial() {
        let cap = 2.0 * BOUNDARY_CAP_NORM.atanh() - hyp_dist(&Point::origin(rep.dim()), rep);
        return Ok(NormalNeighborhood {
            center: p0.clone(),
            radius: cap.max(0.0),
            capped: true,
            complete: true,
            max_word_len,
        });
    }
    let base = local_isometry_radius(g, std::slice::from_ref(rep), max_word_len)?;
    let mut eps = NEIGHBORHOOD_SHRINK * base.radius.to_f64();
    let mut complete = base.complete;
    for _ in 0..20 {
        let sample = hyperbolic_ball_sample(rep, eps, NEIGHBORHOOD_SAMPLES, 0xc0ffee);
        let li = local_isometry_radius(g, &sample, max_word_len)?;
        complete &= li.complete;
        let next = (NEIGHBORHOOD_SHRINK * li.radius.to_f64()).min(eps);
        if (eps - next).abs() <= 1e-12 * eps {
            break;
        }
        eps = next;
    }
    Ok(NormalNeighborhood { center: p0.clone(), radius: eps, capped: false, complete, max_word_len })
}

impl NormalNeighborhood {
    pub fn rep(&self) -> &Point {
        self.center.rep()
    }

    pub fn contains(&self, z: &Point) -> bool {
        hyp_dist(self.rep(), z) < self.radius
    }

    pub fn project(&self, z: Point) -> Result<QuotientPoint> {
        QuotientPoint::new(z, self.center.group().clone())
    }

    /// The representative of `p` inside the chart ball, with the word taking
    /// `p.rep()` to it.
    pub fn lift(&self, p: &QuotientPoint) -> Result<(Word, Point)> {
        if !Arc::ptr_eq(p.group(), self.center.group()) {
            return Err(Error::GroupMismatch);
        }
        let d = projected_pseudo_dist(p.rep(), self.rep(), p.group(), self.max_word_len)?;
        if d.value >= self.radius {
            return Err(Error::ChartCoverage(format!(
                "point is at quotient distance {} from the chart center, radius {}",
                d.value, self.radius
            )));
        }
        Ok((d.word, d.lifted))
    }

    /// Transition from this chart to `other` at the chart point `z`: the word
    /// `w` with `w(z)` the lift in `other`.
    pub fn transition(&self, other: &NormalNeighborhood, z: &Point) -> Result<(Word, Point)> {
        let p = self.project(z.clone())?;
        other.lift(&p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{make_cyclic_translation, make_schottky_2d, standard_schottky_pairs};
    use proptest::prelude::*;

    fn cyclic() -> Arc<GroupPresentation> {
        Arc::new(make_cyclic_translation(2, 1.0).unwrap())
    }

    fn qp(g: &Arc<GroupPresentation>, c: &[f64]) -> QuotientPoint {
        QuotientPoint::new(Point::new(c.to_vec()).unwrap(), g.clone()).unwrap()
    }

    fn axis(g: &Arc<GroupPresentation>, s: f64) -> QuotientPoint {
        QuotientPoint::new(Point::on_axis(2, s), g.clone()).unwrap()
    }

    #[test]
    fn distance_examples() {
        let g = cyclic();
        let a = qp(&g, &[0.1, 0.2]);
        assert_eq!(quotient_dist(&a, &a, 12).unwrap().value, 0.0);
        let d = quotient_dist(&axis(&g, 0.0), &axis(&g, 0.7), 12).unwrap();
        // brute force over powers
        let brute = (-10..=10).map(|k| (0.7 - k as f64).abs()).fold(f64::INFINITY, f64::min);
        assert!((d.value - brute).abs() < 1e-9 && (d.value - 0.3).abs() < 1e-9);
        assert!(d.complete);
        let pd = projected_pseudo_dist(&Point::origin(2), &Point::on_axis(2, 0.9), &g, 12).unwrap();
        assert!((pd.value - 0.1).abs() < 1e-9);
    }

    #[test]
    fn identity_group_is_hyp_dist() {
        let g = Arc::new(GroupPresentation::trivial(3).unwrap());
        let a = qp(&g, &[0.1, 0.2, 0.3]);
        let b = qp(&g, &[-0.4, 0.0, 0.5]);
        assert_eq!(quotient_dist(&a, &b, 12).unwrap().value, hyp_dist(a.rep(), b.rep()));
    }

    #[test]
    fn group_mismatch_rejected() {
        let a = axis(&cyclic(), 0.1);
        let b = axis(&cyclic(), 0.2);
        assert_eq!(quotient_dist(&a, &b, 4).unwrap_err(), Error::GroupMismatch);
    }

    #[test]
    fn injectivity_radius_examples() {
        let g = cyclic();
        let sample: Vec<Point> = (-5..=5).map(|i| Point::on_axis(2, i as f64 * 0.3)).collect();
        let li = local_isometry_radius(&g, &sample, 12).unwrap();
        assert!((li.radius.to_f64() - 0.5).abs() < 1e-9);
        let t = GroupPresentation::trivial(2).unwrap();
        assert_eq!(local_isometry_radius(&t, &sample, 12).unwrap().radius, ExtReal::Infinite);
        // schottky: compare with a brute-force scan of short words
        let s = make_schottky_2d(&standard_schottky_pairs()).unwrap();
        let near0: Vec<Point> = vec![Point::origin(2), Point::new(vec![0.05, -0.03]).unwrap()];
        let li = local_isometry_radius(&s, &near0, 8).unwrap();
        let s = &s;
        let brute = s
            .enumerate_words(5)
            .unwrap()
            .iter()
            .filter(|w| !w.is_empty())
            .flat_map(|w| near0.iter().map(move |z| hyp_dist(z, &s.apply_word(w, z))))
            .fold(f64::INFINITY, f64::min);
        assert!((li.radius.to_f64() - 0.5 * brute).abs() < 1e-9);
    }

    #[test]
    fn dirichlet_examples() {
        let g = cyclic();
        let o = Point::origin(2);
        assert!(in_dirichlet_domain(&g, &o, &o, 12).unwrap().inside);
        assert!(in_dirichlet_domain(&g, &o, &Point::on_axis(2, 0.49), 12).unwrap().inside);
        assert!(!in_dirichlet_domain(&g, &o, &Point::on_axis(2, 0.51), 12).unwrap().inside);
        let tie = in_dirichlet_domain(&g, &o, &Point::on_axis(2, 0.5), 12).unwrap();
        assert!(tie.boundary && !tie.inside);
        let t = GroupPresentation::trivial(2).unwrap();
        assert!(in_dirichlet_domain(&t, &o, &Point::new(vec![0.9, 0.0]).unwrap(), 12).unwrap().inside);
    }

    #[test]
    fn dirichlet_tiling_has_one_translate() {
        let g = make_schottky_2d(&standard_schottky_pairs()).unwrap();
        let p0 = Point::new(vec![0.05, 0.02]).unwrap();
        let mut r = rng::stream(4, 0);
        let words = g.enumerate_words(3).unwrap();
        let mut checked = 0;
        for _ in 0..200 {
            let z = Point::from_image(rng::uniform_in_ball(&mut r, 2, 0.6));
            let mut hits = 0;
            let mut tie = false;
            for w in &words {
                // z in w(D) iff w^{-1}(z) in D
                let pre = g.apply_word(&crate::group::invert_word(w), &z);
                let m = in_dirichlet_domain(&g, &p0, &pre, 6).unwrap();
                tie |= m.boundary;
                hits += m.inside as usize;
            }
            if !tie {
                assert_eq!(hits, 1);
                checked += 1;
            }
        }
        assert!(checked > 150);
    }

    #[test]
    fn normal_neighborhood_examples() {
        let g = cyclic();
        let nb = normal_neighborhood(&axis(&g, 0.0), 12).unwrap();
        assert!((nb.radius - 0.45).abs() < 1e-9, "eps0 = {}", nb.radius);
        let t = Arc::new(GroupPresentation::trivial(2).unwrap());
        let nb_t = normal_neighborhood(&qp(&t, &[0.0, 0.0]), 12).unwrap();
        assert!(nb_t.capped && nb_t.radius > 10.0);
        // chart round trip
        let sample = hyperbolic_ball_sample(nb.rep(), 0.99 * nb.radius, 100, 3);
        for z in sample {
            let p = nb.project(z.clone()).unwrap();
            let (_, back) = nb.lift(&p).unwrap();
            assert!(hyp_dist(&back, &z) < 1e-9);
            // a translate of z projects to the same chart point
            let far = g.apply_word(&[1, 1], &z);
            let (w, lifted) = nb.lift(&QuotientPoint::new(far, g.clone()).unwrap()).unwrap();
            assert_eq!(w, vec![-1, -1]);
            assert!(hyp_dist(&lifted, &z) < 1e-9);
        }
        let outside = axis(&g, 0.47);
        assert!(matches!(nb.lift(&outside), Err(Error::ChartCoverage(_))));
    }

    #[test]
    fn chart_transitions_are_group_words() {
        let g = cyclic();
        let u1 = normal_neighborhood(&axis(&g, 0.0), 12).unwrap();
        // second chart centered at a far translate of a nearby point
        let c2 = g.apply_word(&[1, 1, 1], &Point::on_axis(2, 0.3));
        let u2 = normal_neighborhood(&QuotientPoint::new(c2, g.clone()).unwrap(), 12).unwrap();
        let mut r = rng::stream(8, 0);
        let mut seen = [0, 0];
        for _ in 0..400 {
            let z = Point::from_image(rng::uniform_in_ball(&mut r, 2, 0.25));
            if !u1.contains(&z) {
                continue;
            }
            if let Ok((w, img)) = u1.transition(&u2, &z) {
                // the overlap has two components, one per transition word
                let k = w.len();
                assert!(w.iter().all(|&l| l == 1) && (k == 3 || k == 4), "{w:?}");
                assert!(hyp_dist(&img, &g.apply_word(&w, &z)) < 1e-6);
                seen[k - 3] += 1;
            }
        }
        assert!(seen[0] > 20 && seen[1] > 0, "{seen:?}");
    }

    #[test]
    fn close_pairs_are_isometric() {
        // pairs closer than the injectivity radius satisfy d = h
        let g = cyclic();
        let mut r = rng::stream(11, 0);
        for _ in 0..300 {
            let a = Point::on_axis(2, 4.0 * (rand::Rng::random::<f64>(&mut r) - 0.5));
            let b = Point::on_axis(2, a.coords()[0].atanh() * 2.0 + 0.9 * (rand::Rng::random::<f64>(&mut r) - 0.5));
            let h = hyp_dist(&a, &b);
            let d = projected_pseudo_dist(&a, &b, &g, 12).unwrap().value;
            if h < 0.45 {
                assert!((d - h).abs() < 1e-9);
            }
        }
    }

    fn group_for(which: u8) -> Arc<GroupPresentation> {
        if which == 0 {
            cyclic()
        } else {
            Arc::new(make_schottky_2d(&standard_schottky_pairs()).unwrap())
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn metric_axioms(which in 0u8..2, a in prop::collection::vec(-0.6f64..0.6, 2),
                         b in prop::collection::vec(-0.6f64..0.6, 2), c in prop::collection::vec(-0.6f64..0.6, 2)) {
            let g = group_for(which);
            let (a, b, c) = (qp(&g, &a), qp(&g, &b), qp(&g, &c));
            let ab = quotient_dist(&a, &b, 12).unwrap().value;
            let ba = quotient_dist(&b, &a, 12).unwrap().value;
            let bc = quotient_dist(&b, &c, 12).unwrap().value;
            let ac = quotient_dist(&a, &c, 12).unwrap().value;
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() < 1e-9);
            prop_assert!(ac <= ab + bc + 1e-9);
            prop_assert!(ab <= hyp_dist(a.rep(), b.rep()));
        }

        #[test]
        fn translates_are_identified(which in 0u8..2, a in prop::collection::vec(-0.6f64..0.6, 2),
                                     word in prop::collection::vec(prop::sample::select(vec![1, -1]), 0..4)) {
            let g = group_for(which);
            let p = qp(&g, &a);
            let q = QuotientPoint::new(g.apply_word(&word, p.rep()), g.clone()).unwrap();
            prop_assert!(p.same_orbit(&q, 12).unwrap());
        }
    }
}
