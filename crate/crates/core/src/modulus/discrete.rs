//! Discrete extremal length: the family is clipped to a Cartesian grid and
//! `min Σ v_c ρ_c^n` subject to `Σ_c ℓ_γc ρ_c >= 1` is solved through its dual.
//!
//! For path weights `μ` on the simplex put `a = Aᵀμ` and
//! `G(μ) = Σ_c v_c^{1-q} a_c^q` with `q = n/(n-1)`. Hölder gives
//! `M >= G(μ)^{1-n}` for every `μ`, and `ρ̂_c = (a_c/v_c)^{q-1}` scaled to be
//! admissible gives `M <= G(μ) / min_γ (Aρ̂)_γ^n`. Both bounds are tracked;
//! `μ` follows entropic mirror descent on `G`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::hyperbolic_density;
use crate::mobius::{self, hyp_dist_coords};
use crate::region::Region;

use super::{GridDensity, Metric, PathFamily};

fn default_resolution() -> usize {
    64
}

fn default_max_iterations() -> usize {
    10_000
}

fn default_tolerance() -> f64 {
    1e-6
}

fn default_window() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub metric: Metric,
    /// Cells per axis.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    /// Sub-cell samples per axis for cell volumes; 8 in the plane, 4 above.
    #[serde(default)]
    pub subsamples: Option<usize>,
    /// Chart box; fitted to the family when absent.
    #[serde(default)]
    pub lo: Option<Vec<f64>>,
    #[serde(default)]
    pub hi: Option<Vec<f64>>,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Relative change of the best bounds over `window` iterations that stops the solver.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_window")]
    pub window: usize,
}

impl GridSpec {
    pub fn new(metric: Metric) -> Self {
        GridSpec {
            metric,
            resolution: default_resolution(),
            subsamples: None,
            lo: None,
            hi: None,
            max_iterations: default_max_iterations(),
            tolerance: default_tolerance(),
            window: default_window(),
        }
    }

    pub fn with_resolution(mut self, resolution: usize) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn with_box(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        self.lo = Some(lo);
        self.hi = Some(hi);
        self
    }
}

/// Cartesian cell box; cell indices run fastest along the first axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub resolution: usize,
}

impl GridBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, resolution: usize) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if resolution == 0 || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidParameter("grid box needs lo < hi and a positive resolution".into()));
        }
        Ok(GridBox { lo, hi, resolution })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn step(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.resolution as f64
    }

    pub fn cell_count(&self) -> usize {
        self.resolution.pow(self.dim() as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.step(i)).product()
    }

    pub fn cell_of(&self, x: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for i in (0..self.dim()).rev() {
            let k = ((x[i] - self.lo[i]) / self.step(i)).floor();
            if !(k >= 0.0 && k < self.resolution as f64) {
                return None;
            }
            idx = idx * self.resolution + k as usize;
        }
        Some(idx)
    }

    /// Lower corner of a cell.
    pub fn corner(&self, cell: usize) -> Vec<f64> {
        let mut rem = cell;
        (0..self.dim())
            .map(|i| {
                let k = rem % self.resolution;
                rem /= self.resolution;
                self.lo[i] + k as f64 * self.step(i)
            })
            .collect()
    }

    /// `(cell, length)` pieces of the segment `a b`, length in the metric.
    fn clip_segment(&self, a: &[f64], b: &[f64], metric: Metric, out: &mut Vec<(usize, f64)>) {
        let mut ts = vec![0.0, 1.0];
        for i in 0..self.dim() {
            let d = b[i] - a[i];
            if d == 0.0 {
                continue;
            }
            let h = self.step(i);
            let (u, v) = ((a[i].min(b[i]) - self.lo[i]) / h, (a[i].max(b[i]) - self.lo[i]) / h);
            let mut k = u.ceil();
            while k <= v {
                let t = (self.lo[i] + k * h - a[i]) / d;
                if t > 0.0 && t < 1.0 {
                    ts.push(t);
                }
                k += 1.0;
            }
        }
        ts.sort_by(f64::total_cmp);
        let at = |t: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect() };
        let euclid = mobius::dist_sq(a, b).sqrt();
        for w in ts.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            let Some(cell) = self.cell_of(&at(0.5 * (w[0] + w[1]))) else { continue };
            let len = match metric {
                Metric::Euclidean => euclid * (w[1] - w[0]),
                Metric::Hyperbolic => hyp_dist_coords(&at(w[0]), &at(w[1])),
            };
            if len > 0.0 {
                out.push((cell, len));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridReport {
    #[serde(flatten)]
    pub grid: GridBox,
    pub metric: Metric,
    pub subsamples: usize,
    /// Cells met by at least one path.
    pub cells_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusEstimate {
    /// Objective of the best admissible grid density found.
    pub estimate: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grid: GridReport,
    pub paths: usize,
    /// Relative duality gap `upper/lower - 1`, thinned to at most 256 entries.
    pub residuals: Vec<f64>,
    #[serde(skip)]
    pub density: Option<GridDensity>,
}

struct Discretized {
    rows: Vec<Vec<(u32, f64)>>,
    cols: Vec<Vec<(u32, f64)>>,
    cells: Vec<usize>,
    volumes: Vec<f64>,
    grid: GridBox,
    subsamples: usize,
}

fn grid_box(fam: &PathFamily, spec: &GridSpec) -> Result<GridBox> {
    match (&spec.lo, &spec.hi) {
        (Some(lo), Some(hi)) => {
            if lo.len() != fam.dim() {
                return Err(Error::DimensionMismatch { expected: fam.dim(), got: lo.len() });
            }
            GridBox::new(lo.clone(), hi.clone(), spec.resolution)
        }
        (None, None) => {
            let (mut lo, mut hi) = fam.bounding_box();
            let w = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max).max(1e-9);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                *a -= 0.01 * w;
                *b += 0.01 * w;
            }
            GridBox::new(lo, hi, spec.resolution)
        }
        _ => Err(Error::InvalidParameter("give both lo and hi or neither".into())),
    }
}

fn cell_volume(grid: &GridBox, cell: usize, s: usize, domain: Option<&Region>, metric: Metric) -> f64 {
    let n = grid.dim();
    let corner = grid.corner(cell);
    let steps: Vec<f64> = (0..n).map(|i| grid.step(i) / s as f64).collect();
    let sub = grid.cell_volume() / (s.pow(n as u32)) as f64;
    let weight = |x: &[f64]| match metric {
        Metric::Euclidean => 1.0,
        Metric::Hyperbolic if mobius::norm_sq(x) < 1.0 => hyperbolic_density(x),
        Metric::Hyperbolic => 0.0,
    };
    let mut total = 0.0;
    let mut x = vec![0.0; n];
    for k in 0..s.pow(n as u32) {
        let mut rem = k;
        for i in 0..n {
            x[i] = corner[i] + (rem % s) as f64 * steps[i] + 0.5 * steps[i];
            rem /= s;
        }
        if domain.is_none_or(|d| d.contains(&x)) {
            total += weight(&x);
        }
    }
    if total > 0.0 {
        return total * sub;
    }
    // a path crossed a cell whose samples all missed the domain
    let centre: Vec<f64> = (0..n).map(|i| corner[i] + 0.5 * grid.step(i)).collect();
    weight(&centre).max(1.0) * sub
}

fn discretize(fam: &PathFamily, spec: &GridSpec) -> Result<Discretized> {
    let grid = grid_box(fam, spec)?;
    let s = spec.subsamples.unwrap_or(if fam.dim() <= 2 { 8 } else { 4 }).max(1);
    if grid.cell_count() > u32::MAX as usize {
        return Err(Error::InvalidParameter("grid too large".into()));
    }
    let raw: Vec<Vec<(usize, f64)>> = fam
        .paths()
        .par_iter()
        .map(|p| {
            let mut out = Vec::new();
            for w in p.points().windows(2) {
                grid.clip_segment(w[0].coords(), w[1].coords(), spec.metric, &mut out);
            }
            out.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(out.len());
            for (c, l) in out {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += l,
                    _ => merged.push((c, l)),
                }
            }
            merged
        })
        .collect();
    if let Some(i) = raw.iter().position(Vec::is_empty) {
        return Err(Error::InvalidParameter(format!("path {i} misses the grid box")));
    }
    let mut cells: Vec<usize> = raw.iter().flatten().map(|e| e.0).collect();
    cells.sort_unstable();
    cells.dedup();
    let index = |c: usize| cells.binary_search(&c).unwrap() as u32;
    let rows: Vec<Vec<(u32, f64)>> = raw.iter().map(|r| r.iter().map(|&(c, l)| (index(c), l)).collect()).collect();
    let mut cols = vec![Vec::new(); cells.len()];
    for (g, r) in rows.iter().enumerate() {
        for &(c, l) in r {
            cols[c as usize].push((g as u32, l));
        }
    }
    let volumes = cells.par_iter().map(|&c| cell_volume(&grid, c, s, fam.domain(), spec.metric)).collect();
    Ok(Discretized { rows, cols, cells, volumes, grid, subsamples: s })
}

/// `ρ̂ = (Aᵀμ / v)^{q-1}`, path lengths `g = Aρ̂` and `G = Σ μ g`.
fn dual_step(d: &Discretized, mu: &[f64], q: f64, rho: &mut [f64]) -> (Vec<f64>, f64) {
    d.cols.par_iter().zip(&d.volumes).zip(rho.par_iter_mut()).for_each(|((col, v), r)| {
        let a: f64 = col.iter().map(|&(g, l)| mu[g as usize] * l).sum();
        *r = (a / v).powf(q - 1.0);
    });
    let g: Vec<f64> = d.rows.par_iter().map(|row| row.iter().map(|&(c, l)| rho[c as usize] * l).sum()).collect();
    let big_g = mu.iter().zip(&g).map(|(m, x)| m * x).sum();
    (g, big_g)
}

/// Discrete modulus with full diagnostics; `converged` is false when the
/// iteration budget ran out.
pub fn discrete_modulus_report(fam: &PathFamily, spec: &GridSpec) -> Result<ModulusEstimate> {
    if fam.dim() < 2 {
        return Err(Error::InvalidParameter("dimension must be at least 2".into()));
    }
    let n = fam.dim() as f64;
    let q = n / (n - 1.0);
    let d = discretize(fam, spec)?;
    let paths = d.rows.len();
    let mut mu = vec![1.0 / paths as f64; paths];
    let mut rho = vec![0.0; d.cells.len()];
    let mut best_rho = rho.clone();
    let (mut g, mut big_g) = dual_step(&d, &mu, q, &mut rho);
    let (mut best_ub, mut best_lb) = (f64::INFINITY, 0.0f64);
    let mut history: Vec<(f64, f64)> = Vec::new();
    let mut gaps = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut eta = 1.0;
    let mut trial_rho = rho.clone();
    for t in 1..=spec.max_iterations.max(1) {
        iterations = t;
        let m = g.iter().copied().fold(f64::INFINITY, f64::min);
        let ub = if m > 0.0 { big_g / m.powf(n) } else { f64::INFINITY };
        if ub < best_ub {
            best_ub = ub;
            best_rho.iter_mut().zip(&rho).for_each(|(b, r)| *b = r / m);
        }
        best_lb = best_lb.max(big_g.powf(1.0 - n));
        let gap = best_ub / best_lb - 1.0;
        gaps.push(gap);
        history.push((best_ub, best_lb));
        if gap <= spec.tolerance {
            converged = true;
            break;
        }
        if t > spec.window {
            let (u0, _) = history[t - 1 - spec.window];
            if (u0 - best_ub) / best_ub <= spec.tolerance {
                converged = true;
                break;
            }
        }
        // entropic mirror step on G; the step grows while G decreases and
        // is halved when it would increase
        loop {
            let mut trial: Vec<f64> = mu.iter().zip(&g).map(|(w, x)| w * (-eta * (x / big_g - 1.0)).exp()).collect();
            let s: f64 = trial.iter().sum();
            trial.iter_mut().for_each(|w| *w /= s);
            let (tg, tbig) = dual_step(&d, &trial, q, &mut trial_rho);
            if tbig <= big_g || eta < 1e-12 {
                mu = trial;
                g = tg;
                big_g = tbig;
                std::mem::swap(&mut rho, &mut trial_rho);
                eta *= 1.25;
                break;
            }
            eta *= 0.5;
        }
    }
    let stride = gaps.len().div_ceil(256).max(1);
    let residuals = gaps.iter().step_by(stride).copied().chain(gaps.last().copied().filter(|_| (gaps.len() - 1) % stride != 0)).collect();
    let mut values = vec![0.0; d.grid.cell_count()];
    for (c, r) in d.cells.iter().zip(&best_rho) {
        values[*c] = *r;
    }
    Ok(ModulusEstimate {
        estimate: best_ub,
        lower_bound: best_lb,
        upper_bound: best_ub,
        iterations,
        converged,
        grid: GridReport { grid: d.grid.clone(), metric: spec.metric, subsamples: d.subsamples, cells_used: d.cells.len() },
        paths,
        residuals,
        density: Some(GridDensity { grid: d.grid, values }),
    })
}

/// Discrete modulus of the sampled family; an exhausted iteration budget is
/// an error carrying the best value found.
pub fn discrete_modulus(fam: &PathFamily, spec: &GridSpec) -> Result<ModulusEstimate> {
    let est = discrete_modulus_report(fam, spec)?;
    if !est.converged {
        return Err(Error::NotConverged { iterations: est.iterations, best: est.estimate });
    }
    Ok(est)
}
