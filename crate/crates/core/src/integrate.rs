//! Integrals over cells and cutoff regions.
//!
//! A cutoff region is `{λ_p ≥ θ}` inside a cell, `λ_p` the barycentric
//! coordinate of boundary vertex `p`. Each contraction pulls such a half-plane
//! back to a half-plane `{λ_t ≥ θ'}` or `{λ_t ≤ θ'}` of the unit fractal, so
//! integrals of the harmonic basis over `{λ_p ≥ θ}` satisfy a self-similar
//! recursion. [`HalfPlaneEngine`] unrolls it to a finite depth, bounding the
//! remainder by `0 ≤ ∫ ≤ ∫_K`, and rounds every threshold and partial sum
//! outward, so its results are enclosures.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractal::{Address, CellRef, Fractal, Pullback, VertexFunction};
use crate::harmonic::{HarmonicFunction, Matrix3};
use crate::interval::IntervalValue;

/// Thresholds are fixed-point numbers `n / 2^64`.
pub const ONE: i128 = 1 << 64;
const SCALE: f64 = 18_446_744_073_709_551_616.0; // 2^64

fn div_floor(a: i128, b: i128) -> i128 {
    let q = a / b;
    if a % b != 0 && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn div_ceil(a: i128, b: i128) -> i128 {
    -div_floor(-a, b)
}

fn round(x: f64, up: bool) -> f64 {
    if up {
        x.next_up()
    } else {
        x.next_down()
    }
}

/// An enclosure `[lo, hi] / 2^64` of a cut threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Threshold {
    pub lo: i128,
    pub hi: i128,
}

impl Threshold {
    pub fn exact(n: i128) -> Self {
        Threshold { lo: n, hi: n }
    }

    /// Outward fixed-point enclosure of a float interval.
    pub fn from_f64(lo: f64, hi: f64) -> Self {
        Threshold { lo: (lo * SCALE).floor() as i128, hi: (hi * SCALE).ceil() as i128 }
    }

    pub fn lo_f64(&self) -> f64 {
        self.lo as f64 / SCALE
    }

    pub fn hi_f64(&self) -> f64 {
        self.hi as f64 / SCALE
    }

    /// The threshold seen from a child cell through `αλ_t + β`; returns the
    /// child's coordinate index and whether the half-plane flips direction.
    fn pull(&self, pb: &Pullback, den: i128) -> (usize, Threshold, bool) {
        let (a, b) = (pb.alpha_num as i128, pb.beta_num as i128 * ONE);
        if a > 0 {
            let t = Threshold {
                lo: div_floor(den * self.lo - b, a),
                hi: div_ceil(den * self.hi - b, a),
            };
            (pb.target, t, false)
        } else {
            let t = Threshold {
                lo: div_floor(b - den * self.hi, -a),
                hi: div_ceil(b - den * self.lo, -a),
            };
            (pb.target, t, true)
        }
    }
}

const FULL_LO: [f64; 4] = [0.333_333_333_333_333_2, 0.333_333_333_333_333_2, 0.333_333_333_333_333_2, 1.0];
const FULL_HI: [f64; 4] = [0.333_333_333_333_333_4, 0.333_333_333_333_333_4, 0.333_333_333_333_333_4, 1.0];

/// Enclosures of `(∫ h_0, ∫ h_1, ∫ h_2, μ)` over a region of the unit fractal,
/// `h_j` the harmonic function equal to 1 at `q_j` and 0 at the other boundary points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionIntegrals {
    pub basis: [IntervalValue; 3],
    pub mass: IntervalValue,
    pub converged: bool,
}

impl RegionIntegrals {
    fn from_bounds(lo: [f64; 4], hi: [f64; 4], converged: bool) -> Self {
        let iv = |k: usize| IntervalValue::new(lo[k].min(hi[k]), hi[k].max(lo[k])).widen(1e-15);
        RegionIntegrals { basis: [iv(0), iv(1), iv(2)], mass: iv(3), converged }
    }

    pub fn full() -> Self {
        Self::from_bounds(FULL_LO, FULL_HI, true)
    }

    /// The complementary region `K \ R`.
    pub fn complement(&self) -> Self {
        let full = Self::full();
        RegionIntegrals {
            basis: [0, 1, 2].map(|k| full.basis[k] - self.basis[k]),
            mass: full.mass - self.mass,
            converged: self.converged,
        }
    }

    pub fn width(&self) -> f64 {
        self.basis
            .iter()
            .chain(std::iter::once(&self.mass))
            .map(|v| v.width())
            .fold(0.0, f64::max)
    }

    /// `∫_R h` for the harmonic function with boundary values `b` on the unit fractal.
    pub fn dot(&self, b: [f64; 3]) -> IntervalValue {
        (0..3).map(|k| self.basis[k].scale(b[k])).sum()
    }
}

type Key = (u8, i128, bool, u16);

/// Memoized half-plane integrals for one fractal.
pub struct HalfPlaneEngine<'a> {
    fractal: &'a Fractal,
    den: i128,
    /// `λ_min · den · 2^64`.
    lmin_scaled: i128,
    weight: f64,
    pull: Vec<[Pullback; 3]>,
    ext: Vec<Matrix3>,
    memo: HashMap<Key, [f64; 4]>,
    budget: usize,
}

impl<'a> HalfPlaneEngine<'a> {
    pub const MAX_DEPTH: u16 = 160;

    pub fn new(fractal: &'a Fractal) -> Self {
        let g = fractal.geometry();
        HalfPlaneEngine {
            fractal,
            den: g.den as i128,
            lmin_scaled: g.lambda_min_num as i128 * ONE,
            weight: fractal.descriptor().measure_weight(),
            pull: g.pull.clone(),
            ext: fractal.harmonic().extension.clone(),
            memo: HashMap::new(),
            budget: 4_000_000,
        }
    }

    pub fn fractal(&self) -> &'a Fractal {
        self.fractal
    }

    fn is_full(&self, n: i128) -> bool {
        n * self.den <= self.lmin_scaled
    }

    /// Integrals over `{λ_p ≥ θ}` for every `θ` in the threshold interval.
    /// Deepens the recursion until every width is at most `tol`.
    pub fn ge(&mut self, p: usize, theta: Threshold, tol: f64) -> RegionIntegrals {
        let mut depth = 8u16;
        loop {
            let lo = self.bound(p as u8, theta.hi, depth, false);
            let hi = self.bound(p as u8, theta.lo, depth, true);
            let res = RegionIntegrals::from_bounds(lo, hi, true);
            if res.width() <= tol {
                return res;
            }
            if depth >= Self::MAX_DEPTH || self.memo.len() > self.budget {
                return RegionIntegrals { converged: false, ..res };
            }
            depth = (depth + 6).min(Self::MAX_DEPTH);
        }
    }

    /// Integrals over `{λ_p ≤ θ}`.
    pub fn le(&mut self, p: usize, theta: Threshold, tol: f64) -> RegionIntegrals {
        self.ge(p, theta, tol).complement()
    }

    /// Lower (or upper) bounds for `{λ_p ≥ n/2^64}`, unrolled `depth` levels.
    fn bound(&mut self, p: u8, n: i128, depth: u16, upper: bool) -> [f64; 4] {
        if self.is_full(n) {
            return if upper { FULL_HI } else { FULL_LO };
        }
        if n >= ONE {
            return [0.0; 4];
        }
        if depth == 0 {
            return if upper { FULL_HI } else { [0.0; 4] };
        }
        let key = (p, n, upper, depth);
        if let Some(v) = self.memo.get(&key) {
            return *v;
        }
        let mut acc = [0.0; 4];
        for i in 0..self.pull.len() {
            let pb = self.pull[i][p as usize];
            let (t, th, flip) = Threshold::exact(n).pull(&pb, self.den);
            let child = if !flip {
                // a smaller region for lower bounds: round the threshold up
                self.bound(t as u8, if upper { th.lo } else { th.hi }, depth - 1, upper)
            } else {
                let g = self.bound(t as u8, if upper { th.hi } else { th.lo }, depth - 1, !upper);
                let full = if upper { FULL_HI } else { FULL_LO };
                [0, 1, 2, 3].map(|k| round(full[k] - g[k], upper))
            };
            let a = &self.ext[i];
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s = round(s + round(a[k][j] * child[k], upper), upper);
                }
                acc[j] = round(acc[j] + round(self.weight * s, upper), upper);
            }
            acc[3] = round(acc[3] + round(self.weight * child[3], upper), upper);
        }
        self.memo.insert(key, acc);
        acc
    }
}

/// `E = {y ∈ base_cell : λ_apex(y) ≥ 1 - c·κ}` in the base cell's own barycentric
/// coordinates; the cut line sits at distance `c · axis_extent` from the apex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffRegion {
    pub base_cell: CellRef,
    pub apex: usize,
    pub c: f64,
}

impl CutoffRegion {
    pub fn new(base_cell: CellRef, apex: usize, c: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c) || apex > 2 {
            return Err(Error::InvalidArgument(format!("cutoff c={c}, apex={apex}")));
        }
        Ok(CutoffRegion { base_cell, apex, c })
    }

    /// Enclosure of `1 - c·κ`, exact whenever `c·(1 - λ_min)·den` is a float.
    pub fn threshold(&self, fractal: &Fractal) -> Threshold {
        let g = fractal.geometry();
        let den = g.den as i128;
        // θ = (den - c·K)/den with K = den - λ_min·den
        let k = (g.den - g.lambda_min_num) as f64;
        let ck = self.c * k;
        let exact = self.c.mul_add(k, -ck) == 0.0;
        let (ck_lo, ck_hi) = if exact { (ck, ck) } else { (ck.next_down(), ck.next_up()) };
        let num = Threshold::from_f64(ck_lo, ck_hi);
        Threshold {
            lo: div_floor(den * ONE - num.hi, den),
            hi: div_ceil(den * ONE - num.lo, den),
        }
    }
}

/// `∫_E h = (m·h(p) + n·(h(s) + h(t)))·μ(C)` and `μ(E) = mass·μ(C)` for the
/// cutoff region `E` of a cell `C` with apex `p` and other vertices `s, t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffCoefficients {
    pub m: IntervalValue,
    pub n: IntervalValue,
    pub mass: IntervalValue,
}

impl CutoffCoefficients {
    pub fn width(&self) -> f64 {
        self.m.width().max(self.n.width()).max(self.mass.width())
    }
}

/// Coefficients of a cutoff region, per unit measure of its cell.
pub fn cutoff_coefficients(
    engine: &mut HalfPlaneEngine<'_>,
    region: &CutoffRegion,
    tol: f64,
) -> Result<CutoffCoefficients> {
    let fractal = engine.fractal();
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let j = engine.ge(region.apex, region.threshold(fractal), tol);
    if !j.converged {
        return Err(Error::NotConverged {
            message: format!("cutoff integral at c={}", region.c),
            residual: j.width(),
        });
    }
    let p = region.apex;
    let (s, t) = ((p + 1) % 3, (p + 2) % 3);
    let clamp = |v: IntervalValue| v.clamp_nonneg(1e-12);
    Ok(CutoffCoefficients {
        m: clamp(j.basis[p]),
        n: clamp(IntervalValue::new(
            j.basis[s].lo.min(j.basis[t].lo),
            j.basis[s].hi.max(j.basis[t].hi),
        )),
        mass: clamp(j.mass),
    })
}

/// `μ(C)·(h(p0) + h(p1) + h(p2))/3` with `h(p_i)` the values at the cell's boundary.
pub fn cell_integral_harmonic(fractal: &Fractal, h: &HarmonicFunction, cell: &CellRef) -> f64 {
    let b = fractal.harmonic().cell_boundary_values(h.boundary, &cell.word);
    fractal.cell_measure(cell) * (b[0] + b[1] + b[2]) / 3.0
}

/// Mean of `h` over the two cells of the point's own level meeting at `p`,
/// with the two-cell integral.
pub fn junction_mean(fractal: &Fractal, h: &HarmonicFunction, p: &Address) -> Result<(f64, f64)> {
    let cells = fractal.cells_containing(p, p.level())?;
    if p.level() == 0 || cells.len() != 2 {
        return Err(Error::InvalidArgument(format!("{p} is not a two-cell junction")));
    }
    let integral: f64 = cells.iter().map(|(c, _)| cell_integral_harmonic(fractal, h, c)).sum();
    let measure: f64 = cells.iter().map(|(c, _)| fractal.cell_measure(c)).sum();
    Ok((integral / measure, integral))
}

/// A function that is harmonic on every cell of level `leaf_level`.
pub trait PiecewiseHarmonic {
    fn leaf_level(&self) -> usize;
    /// Values at the boundary points of a cell of level at least `leaf_level`.
    fn cell_values(&self, cell: &CellRef) -> [f64; 3];
    /// Integral over any cell.
    fn cell_integral(&self, cell: &CellRef) -> f64;
    /// Bound on `|f - H|` over a leaf cell, `H` the harmonic function with the
    /// same boundary values.
    fn leaf_defect(&self, _cell: &CellRef) -> f64 {
        0.0
    }
}

/// A global harmonic function.
pub struct Harmonic<'a> {
    pub fractal: &'a Fractal,
    pub h: HarmonicFunction,
}

impl PiecewiseHarmonic for Harmonic<'_> {
    fn leaf_level(&self) -> usize {
        0
    }

    fn cell_values(&self, cell: &CellRef) -> [f64; 3] {
        self.fractal.harmonic().cell_boundary_values(self.h.boundary, &cell.word)
    }

    fn cell_integral(&self, cell: &CellRef) -> f64 {
        cell_integral_harmonic(self.fractal, &self.h, cell)
    }
}

/// The level-`M` piecewise harmonic interpolant of a vertex function, with
/// cell integrals precomputed for every level up to `M`.
pub struct Interpolant<'a> {
    f: &'a VertexFunction,
    per_level: Vec<Vec<f64>>,
}

impl<'a> Interpolant<'a> {
    pub fn new(f: &'a VertexFunction) -> Self {
        let mesh = f.mesh();
        let m = f.level();
        let n = mesh.n_maps();
        let mu = (n as f64).powi(-(m as i32));
        let mut per_level = vec![Vec::new(); m + 1];
        per_level[m] = mesh
            .cells(m)
            .iter()
            .map(|c| mu * c.iter().map(|&v| f.value(v as usize)).sum::<f64>() / 3.0)
            .collect();
        for k in (0..m).rev() {
            per_level[k] = per_level[k + 1].chunks(n).map(|ch| ch.iter().sum()).collect();
        }
        Interpolant { f, per_level }
    }
}

impl PiecewiseHarmonic for Interpolant<'_> {
    fn leaf_level(&self) -> usize {
        self.f.level()
    }

    fn cell_values(&self, cell: &CellRef) -> [f64; 3] {
        self.f.cell_values(cell)
    }

    fn cell_integral(&self, cell: &CellRef) -> f64 {
        self.per_level[cell.level()][self.f.mesh().cell_index(&cell.word)]
    }
}

/// A cell or a cutoff region.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Cell(CellRef),
    Cutoff(CutoffRegion),
}

/// Enclosure of `∫_region f`. Leaf cells cut by the line use the half-plane
/// engine with per-unit-measure width `tol`.
pub fn integrate_region(
    engine: &mut HalfPlaneEngine<'_>,
    f: &impl PiecewiseHarmonic,
    region: &Region,
    tol: f64,
) -> Result<IntervalValue> {
    match region {
        Region::Cell(cell) => {
            let x = f.cell_integral(cell);
            Ok(IntervalValue::point(x).widen(x.abs() * 1e-14))
        }
        Region::Cutoff(cut) => {
            let theta = cut.threshold(engine.fractal());
            let mut acc = Accum::default();
            descend(engine, f, cut.base_cell.clone(), cut.apex, theta, true, tol, &mut acc)?;
            Ok(acc.total())
        }
    }
}

#[derive(Default)]
struct Accum {
    exact: f64,
    exact_abs: f64,
    bounded: IntervalValue,
}

impl Accum {
    fn total(&self) -> IntervalValue {
        IntervalValue::point(self.exact).widen(self.exact_abs * 1e-14) + self.bounded
    }
}

#[allow(clippy::too_many_arguments)]
fn descend(
    engine: &mut HalfPlaneEngine<'_>,
    f: &impl PiecewiseHarmonic,
    cell: CellRef,
    p: usize,
    theta: Threshold,
    ge: bool,
    tol: f64,
    acc: &mut Accum,
) -> Result<()> {
    let all_full = engine.is_full(theta.hi);
    let none_full = theta.lo >= ONE;
    let (full, empty) = if ge { (all_full, none_full) } else { (none_full, all_full) };
    if empty {
        return Ok(());
    }
    if full {
        let x = f.cell_integral(&cell);
        acc.exact += x;
        acc.exact_abs += x.abs();
        return Ok(());
    }
    if cell.level() >= f.leaf_level() {
        let j = if ge { engine.ge(p, theta, tol) } else { engine.le(p, theta, tol) };
        if !j.converged {
            return Err(Error::NotConverged {
                message: format!("half-plane integral in cell {cell}"),
                residual: j.width(),
            });
        }
        let mu = engine.fractal().cell_measure(&cell);
        let d = mu * f.leaf_defect(&cell);
        acc.bounded = acc.bounded + j.dot(f.cell_values(&cell)).scale(mu) + IntervalValue::new(-d, d);
        return Ok(());
    }
    for i in 0..engine.pull.len() {
        let pb = engine.pull[i][p];
        let (t, th, flip) = theta.pull(&pb, engine.den);
        descend(engine, f, cell.child(i), t, th, ge != flip, tol, acc)?;
    }
    Ok(())
}

/// Integral of the level-`M` interpolant of `u` over a cell or cutoff region.
pub fn integrate_vertex_function(
    fractal: &Fractal,
    u: &VertexFunction,
    region: &Region,
    tol: f64,
) -> Result<IntervalValue> {
    let base_level = match region {
        Region::Cell(c) => c.level(),
        Region::Cutoff(r) => r.base_cell.level(),
    };
    if u.level() < base_level + 2 {
        return Err(Error::InvalidArgument(format!(
            "function level {} is too coarse for a level-{base_level} region",
            u.level()
        )));
    }
    let mut engine = HalfPlaneEngine::new(fractal);
    integrate_region(&mut engine, &Interpolant::new(u), region, tol)
}
