//! Finitely generated Möbius groups, word enumeration and orbit search.
//!
//! Words are lists of signed letters: `+k` is generator `k - 1` and `-k` its
//! inverse. A word `l1 l2 ... lk` denotes the map `g_l1 ∘ g_l2 ∘ ... ∘ g_lk`,
//! so the last letter acts first.

use std::collections::BTreeMap;
use std::sync::Arc;

use ordered_float::OrderedFloat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::mobius::{self, hyp_dist_coords, MobiusMap, Point};
use crate::rng;

pub type Word = Vec<i32>;

/// Default cap on enumerated or visited words.
pub const DEFAULT_WORD_CAP: usize = 1_000_000;

const PROBE_COUNT: usize = 100;
const PROBE_RADIUS: f64 = 0.5;
const PROBE_SEED: u64 = 0x5eed_0f_9a0b;
const DEDUP_TOL: f64 = 1e-9;

/// Finite generating set with materialized inverses and a fixed probe set.
#[derive(Debug, Clone)]
pub struct GroupPresentation {
    dim: usize,
    label: String,
    generators: Vec<MobiusMap>,
    // maps[2i] = generator i, maps[2i + 1] = its inverse
    maps: Vec<MobiusMap>,
    probes: Vec<Vec<f64>>,
    word_cap: usize,
    // exact displacement profile of the origin, see `reach`
    origin_profile: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PresentationDoc {
    dimension: usize,
    #[serde(default)]
    label: String,
    generators: Vec<MobiusMap>,
}

impl Serialize for GroupPresentation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PresentationDoc {
            dimension: self.dim,
            label: self.label.clone(),
            generators: self.generators.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupPresentation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = PresentationDoc::deserialize(d)?;
        GroupPresentation::new(doc.dimension, doc.label, doc.generators).map_err(serde::de::Error::custom)
    }
}

impl GroupPresentation {
    pub fn new(dim: usize, label: impl Into<String>, generators: Vec<MobiusMap>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter("group dimension must be at least 2".into()));
        }
        let mut probe_rng = rng::stream(PROBE_SEED, dim as u64);
        let probes: Vec<Vec<f64>> =
            (0..PROBE_COUNT).map(|_| rng::uniform_in_ball(&mut probe_rng, dim, PROBE_RADIUS)).collect();
        let mut maps = Vec::with_capacity(2 * generators.len());
        for (i, g) in generators.iter().enumerate() {
            g.validate()?;
            if let Some(d) = g.dim() {
                if d != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: d });
                }
            }
            let moves = probes.iter().any(|p| mobius::dist_sq(&g.apply_coords(p), p).sqrt() > DEDUP_TOL);
            if !moves {
                return Err(Error::InvalidParameter(format!("generator {i} acts as the identity")));
            }
            for p in &probes {
                if mobius::norm(&g.apply_coords(p)) >= 1.0 {
                    return Err(Error::InvalidParameter(format!("generator {i} does not preserve the ball")));
                }
            }
            maps.push(g.clone());
            maps.push(g.inverse());
        }
        let mut g = GroupPresentation {
            dim,
            label: label.into(),
            generators,
            maps,
            probes,
            word_cap: DEFAULT_WORD_CAP,
            origin_profile: Vec::new(),
        };
        g.origin_profile = g.displacement_profile(&vec![0.0; dim], 64, 20_000);
        Ok(g)
    }

    pub fn trivial(dim: usize) -> Result<Self> {
        Self::new(dim, "trivial", Vec::new())
    }

    pub fn with_word_cap(mut self, cap: usize) -> Self {
        self.word_cap = cap.max(1);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn generators(&self) -> &[MobiusMap] {
        &self.generators
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn word_cap(&self) -> usize {
        self.word_cap
    }

    pub fn is_trivial(&self) -> bool {
        self.generators.is_empty()
    }

    /// All letters in alphabet order `1, -1, 2, -2, ...`.
    pub fn letters(&self) -> Vec<i32> {
        (1..=self.rank() as i32).flat_map(|k| [k, -k]).collect()
    }

    pub fn letter_map(&self, letter: i32) -> &MobiusMap {
        &self.maps[letter_slot(letter)]
    }

    pub fn word_map(&self, word: &[i32]) -> MobiusMap {
        word.iter().fold(MobiusMap::identity(), |acc, &l| acc.compose(self.letter_map(l)))
    }

    pub fn apply_word_coords(&self, word: &[i32], x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        for &l in word.iter().rev() {
            cur = self.letter_map(l).apply_coords(&cur);
        }
        cur
    }

    pub fn apply_word(&self, word: &[i32], x: &Point) -> Point {
        Point::from_image(self.apply_word_coords(word, x.coords()))
    }

    /// All freely reduced words up to `max_word_len`, deduplicated by their
    /// action on the probe set and sorted by length, then lexicographically.
    pub fn enumerate_elements(&self, max_word_len: usize) -> Result<Vec<(Word, MobiusMap)>> {
        let words = self.enumerate_words(max_word_len)?;
        Ok(words.into_iter().map(|w| {
            let m = self.word_map(&w);
            (w, m)
        }).collect())
    }

    /// Word part of [`enumerate_elements`](Self::enumerate_elements).
    pub fn enumerate_words(&self, max_word_len: usize) -> Result<Vec<Word>> {
        let mut index = ProximityIndex::default();
        let identity_images: Vec<f64> = self.probes.concat();
        index.insert(identity_images.clone(), 0);
        let mut kept: Vec<Word> = vec![Vec::new()];
        let mut frontier: Vec<(Word, Vec<f64>)> = vec![(Vec::new(), identity_images)];
        let letters = self.letters();
        for _ in 0..max_word_len {
            // left extension s·w reuses the images of w
            let children: Vec<(Word, Vec<f64>)> = frontier
                .par_iter()
                .flat_map_iter(|(w, images)| {
                    letters
                        .iter()
                        .filter(move |&&s| w.first() != Some(&-s))
                        .map(move |&s| {
                            let g = self.letter_map(s);
                            let imgs: Vec<f64> = images.chunks(self.dim).flat_map(|p| g.apply_coords(p)).collect();
                            let mut word = Vec::with_capacity(w.len() + 1);
                            word.push(s);
                            word.extend_from_slice(w);
                            (word, imgs)
                        })
                })
                .collect();
            let mut next = Vec::new();
            let mut sorted = children;
            sorted.sort_by(|a, b| a.0.cmp(&b.0));
            for (w, imgs) in sorted {
                if index.find(&imgs, DEDUP_TOL).is_some() {
                    continue;
                }
                index.insert(imgs.clone(), kept.len());
                kept.push(w.clone());
                if kept.len() > self.word_cap {
                    return Err(Error::Budget { count: kept.len(), cap: self.word_cap });
                }
                next.push((w, imgs));
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        kept.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        Ok(kept)
    }

    /// Largest displacement `h(x, s(x))` over all letters `s`.
    pub fn max_letter_displacement(&self, x: &[f64]) -> f64 {
        self.maps.iter().map(|m| hyp_dist_coords(x, &m.apply_coords(x))).fold(0.0, f64::max)
    }

    /// Orbit points `w(seed)` with `h(w(seed), center) <= radius` for freely
    /// reduced `w` of length at most `max_word_len`.
    ///
    /// Words grow on the left, so a child is one Möbius step from its parent.
    /// For a prefix `u` still to be added, `h(u(y), c) = h(y, u⁻¹(c)) >= h(y, c) - h(c, u⁻¹(c))`,
    /// so a subtree is skipped once `h(y, c)` exceeds `radius` by more than the
    /// largest displacement of `c` under words of the remaining length (see
    /// [`GroupPresentation::reach`]). The result coincides with exhaustive
    /// enumeration of the same words.
    pub fn orbit_in_ball(&self, seed: &Point, center: &Point, radius: f64, max_word_len: usize) -> Result<OrbitSearch> {
        let raw = self.orbit_candidates(seed, center, radius, max_word_len, false)?;
        let mut index = ProximityIndex::default();
        let mut points = Vec::new();
        for (word, pt, d) in raw.hits {
            if index.find(&pt, DEDUP_TOL).is_some() {
                continue;
            }
            index.insert(pt.clone(), points.len());
            let displacement = hyp_dist_coords(&pt, seed.coords());
            points.push(OrbitPoint { word, point: Point::from_image(pt), distance: d, displacement });
        }
        points.sort_by(|a, b| {
            a.distance
                .total_cmp(&b.distance)
                .then_with(|| a.word.len().cmp(&b.word.len()))
                .then_with(|| a.word.cmp(&b.word))
        });
        Ok(OrbitSearch { points, complete: raw.complete, visited: raw.visited, max_letter_displacement: raw.delta })
    }

    /// Exact `max h(v(p), p)` over reduced words `|v| <= r`, for `r` up to
    /// `levels` or until the next level would exceed `budget` words.
    fn displacement_profile(&self, p: &[f64], levels: usize, budget: usize) -> Vec<f64> {
        let letters = self.letters();
        let mut prof = vec![0.0f64];
        let mut frontier: Vec<(i32, Vec<f64>)> = vec![(0, p.to_vec())];
        let mut total = 1;
        while prof.len() <= levels && !letters.is_empty() {
            let width = frontier.len() * letters.len();
            if total + width > budget {
                break;
            }
            total += width;
            let mut best = *prof.last().unwrap();
            let mut next = Vec::with_capacity(width);
            for (first, pt) in &frontier {
                for &s in letters.iter().filter(|&&s| s != -first) {
                    let q = self.letter_map(s).apply_coords(pt);
                    best = best.max(hyp_dist_coords(&q, p));
                    next.push((s, q));
                }
            }
            prof.push(best);
            frontier = next;
        }
        prof
    }

    /// Upper bounds `b[r] >= max h(v(c), c)` over reduced words `|v| <= r`,
    /// `r = 0..=len`: an exact profile at `c` for short words, extended by
    /// subadditivity, capped by `2 h(c, 0) + ` the same bound at the origin.
    pub fn reach(&self, c: &Point, len: usize) -> Vec<f64> {
        if self.is_trivial() {
            return vec![0.0; len + 1];
        }
        let extend = |exact: &[f64]| {
            let mut b = exact.to_vec();
            b.truncate(len + 1);
            while b.len() <= len {
                let r = b.len();
                let v = (1..exact.len().min(r)).map(|a| b[a] + b[r - a]).fold(f64::INFINITY, f64::min);
                b.push(v);
            }
            b
        };
        let at_c = extend(&self.displacement_profile(c.coords(), len, 256));
        let at_0 = extend(&self.origin_profile);
        let shift = 2.0 * mobius::hyperbolic_radius(c.norm());
        at_c.iter().zip(&at_0).map(|(a, b)| a.min(shift + b)).collect()
    }

    /// Pruned search without deduplication; hits are in breadth-first order.
    /// With `shrink`, the radius drops to the best nontrivial hit after each
    /// level, for callers that only need the minimum.
    pub(crate) fn orbit_candidates(
        &self,
        seed: &Point,
        center: &Point,
        radius: f64,
        max_word_len: usize,
        shrink: bool,
    ) -> Result<RawOrbit> {
        self.check_point(seed)?;
        self.check_point(center)?;
        if !(radius >= 0.0) {
            return Err(Error::InvalidParameter("orbit radius must be nonnegative".into()));
        }
        let reach = self.reach(center, max_word_len.max(1));
        let mut radius = radius;
        let slack = 1e-9 * radius.max(1.0);
        let letters = self.letters();
        let mut found: Vec<(Word, Vec<f64>, f64)> = Vec::new();
        let d0 = hyp_dist_coords(seed.coords(), center.coords());
        let mut visited = 1usize;
        let mut frontier: Vec<(Word, Vec<f64>)> = Vec::new();
        if d0 <= radius {
            found.push((Vec::new(), seed.coords().to_vec(), d0));
        }
        if d0 - reach[max_word_len] <= radius + slack {
            frontier.push((Vec::new(), seed.coords().to_vec()));
        }
        // words at the length limit that could still have descendants in the ball
        let mut complete = self.is_trivial() || max_word_len > 0 || d0 - reach[1] > radius + slack;
        for level in 1..=max_word_len {
            if frontier.is_empty() {
                break;
            }
            let remaining = reach[max_word_len - level];
            let children: Vec<(Word, Vec<f64>, f64)> = frontier
                .par_iter()
                .flat_map_iter(|(w, pt)| {
                    letters.iter().filter(move |&&s| w.first() != Some(&-s)).map(move |&s| {
                        let mut word = Vec::with_capacity(w.len() + 1);
                        word.push(s);
                        word.extend_from_slice(w);
                        let q = self.letter_map(s).apply_coords(pt);
                        let d = hyp_dist_coords(&q, center.coords());
                        (word, q, d)
                    })
                })
                .collect();
            visited += children.len();
            if visited > self.word_cap {
                return Err(Error::Budget { count: visited, cap: self.word_cap });
            }
            if level == max_word_len {
                complete = children.iter().all(|(_, _, d)| d - reach[1] > radius + slack);
            }
            if shrink {
                radius = children.iter().map(|c| c.2).fold(radius, f64::min);
            }
            let mut next = Vec::new();
            for (word, pt, d) in children {
                if d <= radius {
                    found.push((word.clone(), pt.clone(), d));
                }
                if d - remaining <= radius + slack {
                    next.push((word, pt));
                }
            }
            frontier = next;
        }
        Ok(RawOrbit { hits: found, complete, visited, delta: reach[1] })
    }

    /// Falsification test for discontinuity and freeness of the action.
    pub fn check_discreteness(&self, max_word_len: usize, probe_count: usize) -> Result<DiscretenessReport> {
        self.check_discreteness_with(max_word_len, probe_count, DEFAULT_DISCRETENESS_THRESHOLD)
    }

    pub fn check_discreteness_with(
        &self,
        max_word_len: usize,
        probe_count: usize,
        threshold: f64,
    ) -> Result<DiscretenessReport> {
        if probe_count == 0 {
            return Err(Error::InvalidParameter("probe_count must be positive".into()));
        }
        let mut r = rng::stream(PROBE_SEED, 1000 + self.dim as u64);
        let mut probes = vec![vec![0.0; self.dim]];
        probes.extend((1..probe_count).map(|_| rng::uniform_in_ball(&mut r, self.dim, 0.9)));
        let words = self.enumerate_words(max_word_len)?;
        let best = words
            .par_iter()
            .filter(|w| !w.is_empty())
            .map(|w| {
                let m = self.word_map(w);
                let mut best = (f64::INFINITY, 0usize);
                for (i, p) in probes.iter().enumerate() {
                    let d = hyp_dist_coords(p, &m.apply_coords(p));
                    if d < best.0 {
                        best = (d, i);
                    }
                }
                (best.0, best.1, w.clone())
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.2.len().cmp(&b.2.len())).then_with(|| a.2.cmp(&b.2)));
        let (min_displacement, witness_word, witness_probe) = match best {
            Some((d, i, w)) => (ExtReal::from_f64(d), Some(w), Some(probes[i].clone())),
            None => (ExtReal::Infinite, None, None),
        };
        let fixed_point = min_displacement.to_f64() < FIXED_POINT_TOL;
        Ok(DiscretenessReport {
            min_displacement,
            witness_word,
            witness_probe,
            threshold,
            pass: min_displacement.to_f64() > threshold,
            fixed_point_found: fixed_point,
            words_checked: words.len(),
            probes: probe_count,
            heuristic: true,
        })
    }

    pub(crate) fn check_point(&self, p: &Point) -> Result<()> {
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: p.dim() });
        }
        Ok(())
    }
}

fn letter_slot(letter: i32) -> usize {
    debug_assert!(letter != 0);
    if letter > 0 {
        2 * (letter as usize - 1)
    } else {
        2 * ((-letter) as usize - 1) + 1
    }
}

pub fn invert_word(word: &[i32]) -> Word {
    word.iter().rev().map(|l| -l).collect()
}

pub fn is_reduced(word: &[i32]) -> bool {
    word.windows(2).all(|p| p[0] != -p[1]) && !word.contains(&0)
}

pub const DEFAULT_DISCRETENESS_THRESHOLD: f64 = 1e-3;
const FIXED_POINT_TOL: f64 = 1e-6;

pub(crate) struct RawOrbit {
    pub hits: Vec<(Word, Vec<f64>, f64)>,
    pub complete: bool,
    pub visited: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitPoint {
    pub word: Word,
    pub point: Point,
    /// Hyperbolic distance to the search center.
    pub distance: f64,
    /// Hyperbolic distance to the seed.
    pub displacement: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitSearch {
    pub points: Vec<OrbitPoint>,
    /// False when words at the length limit could still have descendants
    /// inside the ball, i.e. the list may miss longer words.
    pub complete: bool,
    pub visited: usize,
    /// Largest displacement of the center by a single letter.
    pub max_letter_displacement: f64,
}

/// Result of [`GroupPresentation::check_discreteness`]. A pass is evidence,
/// not a proof.
#[derive(Debug, Clone, Serialize)]
pub struct DiscretenessReport {
    pub min_displacement: ExtReal,
    pub witness_word: Option<Word>,
    pub witness_probe: Option<Vec<f64>>,
    pub threshold: f64,
    pub pass: bool,
    pub fixed_point_found: bool,
    pub words_checked: usize,
    pub probes: usize,
    pub heuristic: bool,
}

/// Tolerance lookup of coordinate vectors, keyed on the first coordinate.
#[derive(Debug, Default)]
pub(crate) struct ProximityIndex {
    by_first: BTreeMap<OrderedFloat<f64>, Vec<(Vec<f64>, usize)>>,
}

impl ProximityIndex {
    pub(crate) fn insert(&mut self, v: Vec<f64>, id: usize) {
        self.by_first.entry(OrderedFloat(v[0])).or_default().push((v, id));
    }

    /// Id of a stored vector within `tol` of `v` in every coordinate.
    pub(crate) fn find(&self, v: &[f64], tol: f64) -> Option<usize> {
        let lo = OrderedFloat(v[0] - tol);
        let hi = OrderedFloat(v[0] + tol);
        self.by_first.range(lo..=hi).flat_map(|(_, bucket)| bucket).find_map(|(w, id)| {
            w.iter().zip(v).all(|(a, b)| (a - b).abs() <= tol).then_some(*id)
        })
    }
}

/// Hyperbolic translation by `length` along the first coordinate axis.
pub fn make_cyclic_translation(dim: usize, length: f64) -> Result<GroupPresentation> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::InvalidParameter("translation length must be positive".into()));
    }
    if dim < 2 {
        return Err(Error::InvalidParameter("group dimension must be at least 2".into()));
    }
    let g = mobius::translation_from_origin(&Point::on_axis(dim, length));
    GroupPresentation::new(dim, format!("cyclic(length={length})"), vec![g])
}

/// One generator pair of a planar Schottky group. Both circles are
/// orthogonal to the unit circle and cut it in the arcs
/// `[angle - half_width, angle + half_width]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchottkyPair {
    pub angle_a: f64,
    pub angle_b: f64,
    pub half_width: f64,
}

impl SchottkyPair {
    /// Pair whose generator translates by `length` along its axis.
    pub fn with_translation_length(angle_a: f64, angle_b: f64, length: f64) -> Self {
        SchottkyPair { angle_a, angle_b, half_width: (length / 2.0).tanh().acos() }
    }

    /// Translation length `2 artanh(cos w)` when the circles are antipodal.
    pub fn translation_length(&self) -> f64 {
        2.0 * self.half_width.cos().atanh()
    }

    /// Maps the exterior of circle A onto the interior of circle B: reflect in
    /// the line through 0 bisecting the two directions, then invert in B.
    pub fn generator(&self) -> MobiusMap {
        let beta = 0.5 * (self.angle_a + self.angle_b);
        let normal = vec![-beta.sin(), beta.cos()];
        let sec = 1.0 / self.half_width.cos();
        let center = vec![sec * self.angle_b.cos(), sec * self.angle_b.sin()];
        MobiusMap::from_chain(vec![
            mobius::Primitive::Inversion { center, radius: self.half_width.tan() },
            mobius::Primitive::Reflection { normal },
        ])
        .expect("schottky circles are orthogonal to the unit circle by construction")
    }
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

pub fn make_schottky_2d(pairs: &[SchottkyPair]) -> Result<GroupPresentation> {
    let mut arcs = Vec::new();
    for p in pairs {
        if !(p.half_width > 0.0 && p.half_width < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParameter("half_width must lie in (0, pi/2)".into()));
        }
        if !(p.angle_a.is_finite() && p.angle_b.is_finite()) {
            return Err(Error::InvalidParameter("angles must be finite".into()));
        }
        arcs.push((p.angle_a, p.half_width));
        arcs.push((p.angle_b, p.half_width));
    }
    for i in 0..arcs.len() {
        for j in i + 1..arcs.len() {
            if angle_gap(arcs[i].0, arcs[j].0) <= arcs[i].1 + arcs[j].1 {
                return Err(Error::OverlappingDisks(i, j));
            }
        }
    }
    let gens = pairs.iter().map(SchottkyPair::generator).collect();
    GroupPresentation::new(2, format!("schottky2d({} pairs)", pairs.len()), gens)
}

/// Two-pair Schottky group used by the examples: axes along the coordinate
/// axes, both generators translating by 2.
pub fn standard_schottky_pairs() -> Vec<SchottkyPair> {
    use std::f64::consts::PI;
    vec![
        SchottkyPair::with_translation_length(PI, 0.0, 2.0),
        SchottkyPair::with_translation_length(1.5 * PI, 0.5 * PI, 2.0),
    ]
}

/// JSON group description: shorthand for the canonical families or an
/// explicit presentation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupSpec {
    Shorthand(GroupShorthand),
    Explicit(GroupPresentation),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupShorthand {
    Cyclic {
        length: f64,
        #[serde(default = "default_dim")]
        dimension: usize,
    },
    #[serde(rename = "schottky2d")]
    Schottky2d { pairs: Vec<SchottkyPair> },
    Trivial {
        #[serde(default = "default_dim")]
        dimension: usize,
    },
}

fn default_dim() -> usize {
    2
}

impl GroupSpec {
    pub fn build(&self) -> Result<Arc<GroupPresentation>> {
        let g = match self {
            GroupSpec::Shorthand(GroupShorthand::Cyclic { length, dimension }) => {
                make_cyclic_translation(*dimension, *length)?
            }
            GroupSpec::Shorthand(GroupShorthand::Schottky2d { pairs }) => make_schottky_2d(pairs)?,
            GroupSpec::Shorthand(GroupShorthand::Trivial { dimension }) => GroupPresentation::trivial(*dimension)?,
            GroupSpec::Explicit(g) => g.clone(),
        };
        Ok(Arc::new(g))
    }
}
