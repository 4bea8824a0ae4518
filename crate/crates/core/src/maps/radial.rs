//! The radial stretch family `h_m` and its rescaled copies `g̃_m`.
//!
//! With `s = (m-1)/m` and scale `r` (1 for `h_m`), the map is `x ↦ R(|x|) x/|x|`
//! where `R(ρ) = k ρ` for `ρ < r s` and `R(ρ) = r e exp(-L^α)`,
//! `L = log(e r / ρ)`, beyond. The constant `k` makes the branches meet, and
//! `R(r) = r`, so the sphere of radius `r` is fixed pointwise.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mobius;

use super::SmoothMap;

/// Chart radius `r0' = (e^{r0} - 1)/(e^{r0} + 1) = tanh(r0/2)` of the
/// quotient ball of radius `r0`.
pub fn fm_chart_radius(r0: f64) -> f64 {
    (r0 / 2.0).tanh()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialExample {
    dim: usize,
    alpha: f64,
    m: u32,
    scale: f64,
    /// Slope of the inner branch.
    k: f64,
}

impl RadialExample {
    /// `h_m` on the unit ball of `R^dim`.
    pub fn new(dim: usize, alpha: f64, m: u32) -> Result<Self> {
        Self::scaled(dim, alpha, m, 1.0)
    }

    /// `g̃_m = r h_m(·/r)` on `B(0, r)`.
    pub fn scaled(dim: usize, alpha: f64, m: u32, scale: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter("dimension must be at least 2".into()));
        }
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter("alpha must be at least 1".into()));
        }
        if m < 1 {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(Error::InvalidParameter("scale must lie in (0, 1]".into()));
        }
        let s = (m - 1) as f64 / m as f64;
        let k = if m == 1 { f64::NAN } else { std::f64::consts::E / (s * (1.0 - s.ln()).powf(alpha).exp()) };
        Ok(RadialExample { dim, alpha, m, scale, k })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Radius of the seam sphere, `r (m-1)/m`.
    pub fn seam(&self) -> f64 {
        self.scale * (self.m - 1) as f64 / self.m as f64
    }

    /// Outer-branch formula, valid for `0 < ρ < e r`.
    pub fn outer_branch(&self, rho: f64) -> f64 {
        let l = (std::f64::consts::E * self.scale / rho).ln();
        self.scale * std::f64::consts::E * (-l.powf(self.alpha)).exp()
    }

    /// Inner-branch formula `k ρ`.
    pub fn inner_branch(&self, rho: f64) -> f64 {
        self.k * rho
    }

    /// `R(ρ)` and `R'(ρ)`.
    pub fn profile(&self, rho: f64) -> (f64, f64) {
        if self.m > 1 && rho < self.seam() {
            return (self.k * rho, self.k);
        }
        if rho == 0.0 {
            // m = 1: R(ρ)/ρ → 1 for α = 1 and → 0 otherwise
            let d = if self.alpha == 1.0 { 1.0 } else { 0.0 };
            return (0.0, d);
        }
        let l = (std::f64::consts::E * self.scale / rho).ln();
        let r = self.outer_branch(rho);
        (r, r * self.alpha * l.powf(self.alpha - 1.0) / rho)
    }

    /// `ρ` with `R(ρ) = t`.
    pub fn inverse_profile(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        if self.m > 1 && t < self.k * self.seam() {
            return t / self.k;
        }
        let l = (1.0 + (self.scale / t).ln()).powf(1.0 / self.alpha);
        self.scale * (1.0 - l).exp()
    }

    /// `α log^{α-1}(e r / |x|)`, attained on the outer branch.
    pub fn inner_dilatation_bound(&self, x: &[f64]) -> f64 {
        let rho = mobius::norm(x);
        self.alpha * (std::f64::consts::E * self.scale / rho).ln().powf(self.alpha - 1.0)
    }

    fn radial_jacobian(x: &[f64], ratio: f64, deriv: f64) -> DMatrix<f64> {
        let n = x.len();
        let rho = mobius::norm(x);
        let mut j = DMatrix::identity(n, n) * ratio;
        if rho > 0.0 {
            for a in 0..n {
                for b in 0..n {
                    j[(a, b)] += (deriv - ratio) * x[a] * x[b] / (rho * rho);
                }
            }
        }
        j
    }

    pub fn inverse(&self) -> RadialInverse {
        RadialInverse(*self)
    }
}

impl SmoothMap for RadialExample {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let rho = mobius::norm(x);
        let (r, _) = self.profile(rho);
        Ok(if rho == 0.0 { x.to_vec() } else { x.iter().map(|c| c * r / rho).collect() })
    }

    fn analytic_jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let rho = mobius::norm(x);
        let (r, d) = self.profile(rho);
        let ratio = if rho == 0.0 { d } else { r / rho };
        Some(Self::radial_jacobian(x, ratio, d))
    }

    fn margin(&self, x: &[f64]) -> f64 {
        self.scale - mobius::norm(x)
    }

    fn describe(&self) -> String {
        format!("radial_example(alpha={}, m={}, scale={})", self.alpha, self.m, self.scale)
    }
}

/// Inverse of a [`RadialExample`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialInverse(pub RadialExample);

impl SmoothMap for RadialInverse {
    fn dim(&self) -> usize {
        self.0.dim
    }

    fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        let t = mobius::norm(y);
        let rho = self.0.inverse_profile(t);
        Ok(if t == 0.0 { y.to_vec() } else { y.iter().map(|c| c * rho / t).collect() })
    }

    fn analytic_jacobian(&self, y: &[f64]) -> Option<DMatrix<f64>> {
        let t = mobius::norm(y);
        let rho = self.0.inverse_profile(t);
        let (_, d) = self.0.profile(rho);
        let ratio = if t == 0.0 { 1.0 / d } else { rho / t };
        Some(RadialExample::radial_jacobian(y, ratio, 1.0 / d))
    }

    fn margin(&self, y: &[f64]) -> f64 {
        self.0.scale - mobius::norm(y)
    }

    fn describe(&self) -> String {
        format!("inverse({})", self.0.describe())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{finite_difference_jacobian, inner_dilatation, max_stretch, outer_dilatation};
    use crate::rng;
    use std::f64::consts::E;

    /// The map without its analytic Jacobian.
    struct Numeric<'a>(&'a RadialExample);

    impl SmoothMap for Numeric<'_> {
        fn dim(&self) -> usize {
            self.0.dim
        }
        fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
            self.0.apply(x)
        }
        fn describe(&self) -> String {
            String::new()
        }
    }

    #[test]
    fn seam_continuity() {
        for m in [2, 4, 8] {
            for alpha in [1.0, 2.0, 3.0] {
                let h = RadialExample::new(2, alpha, m).unwrap();
                let s = h.seam();
                assert!((h.inner_branch(s) - h.outer_branch(s)).abs() < 1e-9);
                let g = RadialExample::scaled(2, alpha, m, 0.3).unwrap();
                assert!((g.inner_branch(g.seam()) - g.outer_branch(g.seam())).abs() < 1e-9);
                // the scaled map fixes its boundary sphere
                assert!((g.profile(0.3).0 - 0.3).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn outer_branch_does_not_depend_on_m() {
        let (a, b) = (RadialExample::new(2, 2.0, 2).unwrap(), RadialExample::new(2, 2.0, 50).unwrap());
        for rho in [0.99, 0.98, 0.985] {
            assert_eq!(a.profile(rho).0, b.profile(rho).0);
        }
        let x = [0.6, 0.2];
        assert_eq!(a.apply(&x).unwrap(), RadialExample::new(2, 2.0, 2).unwrap().apply(&x).unwrap());
    }

    #[test]
    fn analytic_derivatives_by_hand() {
        // at x = (0.5, 0), α = 2, m = 1: radial derivative 2 R L / ρ, tangential R / ρ
        let h = RadialExample::new(2, 2.0, 1).unwrap();
        let l = (E / 0.5f64).ln();
        let r = E * (-l * l).exp();
        let j = finite_difference_jacobian(&Numeric(&h), &[0.5, 0.0], 1e-6).unwrap();
        assert!((j[(0, 0)] / (2.0 * r * l / 0.5) - 1.0).abs() < 1e-5);
        assert!((j[(1, 1)] / (r / 0.5) - 1.0).abs() < 1e-5);
        assert!(j[(0, 1)].abs() < 1e-8 && j[(1, 0)].abs() < 1e-8);
    }

    #[test]
    fn finite_differences_match_analytic_jacobian() {
        let mut rng = rng::stream(12, 0);
        for (alpha, m, dim) in [(2.0, 4, 2), (3.0, 2, 3), (1.5, 8, 2)] {
            let h = RadialExample::new(dim, alpha, m).unwrap();
            let mut checked = 0;
            while checked < 100 {
                let x = rng::uniform_in_ball(&mut rng, dim, 0.95);
                let rho = mobius::norm(&x);
                if (rho - h.seam()).abs() < 1e-4 || rho < 1e-3 {
                    continue;
                }
                let a = h.analytic_jacobian(&x).unwrap();
                let f = finite_difference_jacobian(&Numeric(&h), &x, crate::maps::fd_step(&x)).unwrap();
                assert!((&a - &f).abs().max() <= 1e-5 * a.abs().max(), "{x:?}");
                checked += 1;
            }
        }
    }

    #[test]
    fn inner_dilatation_bound_holds() {
        let mut rng = rng::stream(13, 0);
        for alpha in [1.0, 2.0, 3.0] {
            for m in [2, 4, 8] {
                let h = RadialExample::new(2, alpha, m).unwrap();
                for _ in 0..2000 {
                    let x = rng::uniform_in_ball(&mut rng, 2, 0.999);
                    let ki = inner_dilatation(&h.analytic_jacobian(&x).unwrap()).to_f64();
                    assert!(ki >= 1.0 - 1e-9);
                    assert!(ki <= h.inner_dilatation_bound(&x) * (1.0 + 1e-3), "{x:?} {ki}");
                    let ko = outer_dilatation(&h.analytic_jacobian(&x).unwrap()).to_f64();
                    assert!(ko >= 1.0 - 1e-9);
                }
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        let g = RadialExample::scaled(3, 2.0, 4, 0.2).unwrap();
        let inv = g.inverse();
        let mut rng = rng::stream(14, 0);
        for _ in 0..500 {
            let x = rng::uniform_in_ball(&mut rng, 3, 0.2);
            let y = g.apply(&x).unwrap();
            let back = inv.apply(&y).unwrap();
            assert!(mobius::dist_sq(&back, &x).sqrt() < 1e-12 + 1e-9 * mobius::norm(&x));
            let j = g.analytic_jacobian(&x).unwrap() * inv.analytic_jacobian(&y).unwrap();
            assert!((j - DMatrix::identity(3, 3)).abs().max() < 1e-8);
        }
    }

    #[test]
    fn injective_on_samples() {
        let h = RadialExample::new(2, 2.0, 4).unwrap();
        let mut rng = rng::stream(15, 0);
        let xs: Vec<Vec<f64>> = (0..10_000).map(|_| rng::uniform_in_ball(&mut rng, 2, 0.99)).collect();
        let mut ys: Vec<(Vec<f64>, usize)> = xs.iter().enumerate().map(|(i, x)| (h.apply(x).unwrap(), i)).collect();
        ys.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]));
        for i in 0..ys.len() {
            for j in i + 1..ys.len() {
                if ys[j].0[0] - ys[i].0[0] > 1e-9 {
                    break;
                }
                if mobius::dist_sq(&ys[i].0, &ys[j].0).sqrt() < 1e-9 {
                    assert!(mobius::dist_sq(&xs[ys[i].1], &xs[ys[j].1]).sqrt() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn stretch_against_directional_sampling() {
        let h = RadialExample::new(2, 2.0, 4).unwrap();
        for x in [[0.8, 0.1], [0.3, -0.5], [0.1, 0.05]] {
            let l = max_stretch(&Numeric(&h), &x).unwrap();
            let fx = h.apply(&x).unwrap();
            let best = (0..64)
                .map(|k| {
                    let a = std::f64::consts::PI * k as f64 / 64.0;
                    let y = [x[0] + 1e-5 * a.cos(), x[1] + 1e-5 * a.sin()];
                    mobius::dist_sq(&h.apply(&y).unwrap(), &fx).sqrt() / 1e-5
                })
                .fold(0.0, f64::max);
            assert!((best / l - 1.0).abs() < 1e-3, "{best} vs {l}");
        }
    }
}
