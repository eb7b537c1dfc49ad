//! Mean value neighborhoods `B = C_w ∪ E_0 ∪ E_1 ∪ E_2`, the coefficient map
//! `T`, its inversion, and the constants `c_B = M_B(v) - v(x)`.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractal::{Address, CellRef, Fractal, Mesh};
use crate::green::{phi_eval, GreenPotential, Phi};
use crate::harmonic::{harmonic_eval, HarmonicFunction};
use crate::integrate::{
    cutoff_coefficients, integrate_region, CutoffCoefficients, CutoffRegion, HalfPlaneEngine, Harmonic,
    PiecewiseHarmonic, Region,
};
use crate::interval::IntervalValue;

/// Width requested from the half-plane engine for cutoff coefficients.
pub const COEFF_TOL: f64 = 1e-10;
const GRID: usize = 17;
const NEWTON_TOL: f64 = 1e-8;
const NEWTON_ITERS: usize = 60;
const FD_STEP: f64 = 1e-4;

/// The cut sizes `(c_0, c_1, c_2)` of a neighborhood of `base_cell`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub base_cell: CellRef,
    pub c: [f64; 3],
}

impl CutoffSpec {
    pub fn new(base_cell: CellRef, c: [f64; 3]) -> Result<Self> {
        if c.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidArgument(format!("cut sizes {c:?} outside [0,1]")));
        }
        Ok(CutoffSpec { base_cell, c })
    }

    /// At least one cut is empty.
    pub fn in_b_star(&self) -> bool {
        self.c.contains(&0.0)
    }
}

/// `M_B(h) = Σ a_i h(p_i)` for harmonic `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTriple {
    pub a: [IntervalValue; 3],
}

impl CoefficientTriple {
    pub fn mid(&self) -> [f64; 3] {
        self.a.map(|x| x.mid())
    }

    pub fn sum(&self) -> IntervalValue {
        self.a.iter().copied().sum()
    }

    pub fn width(&self) -> f64 {
        self.a.iter().map(|x| x.width()).fold(0.0, f64::max)
    }
}

/// How many boundary points of the base cell have no neighbor cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeighborhoodCase {
    AllJunctions,
    OneNonjunction,
    TwoNonjunctions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanValueNeighborhood {
    pub spec: CutoffSpec,
    pub x: Address,
    pub target: [f64; 3],
    /// `max_j |M_B(h_j) - h_j(x)|` over the harmonic basis, from direct integration.
    pub residual: f64,
    pub coefficients: [CutoffCoefficients; 3],
    pub case: NeighborhoodCase,
}

fn zero_coefficients() -> CutoffCoefficients {
    let z = IntervalValue::point(0.0);
    CutoffCoefficients { m: z, n: z, mass: z }
}

/// Per-neighbor cutoff coefficients for cut sizes `c`, given the number of
/// neighbor cells `l` at each boundary point.
pub fn cutoff_triple(
    engine: &mut HalfPlaneEngine<'_>,
    l: [usize; 3],
    c: [f64; 3],
    tol: f64,
) -> Result<[CutoffCoefficients; 3]> {
    let mut out = [zero_coefficients(); 3];
    for i in 0..3 {
        if l[i] == 0 && c[i] != 0.0 {
            return Err(Error::InvalidArgument(format!("c_{i} must be 0 at a nonjunction point")));
        }
        if c[i] > 0.0 {
            let region = CutoffRegion::new(CellRef::root(), i, c[i])?;
            out[i] = cutoff_coefficients(engine, &region, tol)?;
        }
    }
    Ok(out)
}

/// Combine cutoff coefficients into `T(c)`, eliminating the far vertices of
/// the neighbor cells with the mean value property at each `p_i`.
pub fn assemble(l: [usize; 3], k: &[CutoffCoefficients; 3]) -> CoefficientTriple {
    let third = IntervalValue::around(1.0 / 3.0, 1);
    let mut mass = IntervalValue::point(1.0);
    for i in 0..3 {
        mass = mass + k[i].mass.scale(l[i] as f64);
    }
    let a = [0, 1, 2].map(|i| {
        let mut s = third + k[i].m.scale(l[i] as f64) + k[i].n.scale(2.0 * l[i] as f64 + 2.0);
        for j in (0..3).filter(|&j| j != i) {
            s = s - k[j].n;
        }
        s.div(&mass).expect("mass is at least 1")
    });
    CoefficientTriple { a }
}

/// The coefficient map `T(c)` for a neighborhood type with neighbor counts `l`.
pub fn tmap(engine: &mut HalfPlaneEngine<'_>, l: [usize; 3], c: [f64; 3], tol: f64) -> Result<CoefficientTriple> {
    Ok(assemble(l, &cutoff_triple(engine, l, c, tol)?))
}

/// `(u, v)` with `x = F_w F_u q_v` for the base cell `F_w`.
fn relative_position(fractal: &Fractal, x: &Address, cell: &CellRef) -> Result<(Vec<u8>, usize)> {
    for v in 0..3 {
        if fractal.address(&cell.word, v)? == *x {
            return Ok((Vec::new(), v));
        }
    }
    if cell.is_prefix_of(x.word()) {
        return Ok((x.word()[cell.level()..].to_vec(), x.vertex()));
    }
    Err(Error::InvalidArgument(format!("{x} is not in cell {cell}")))
}

/// `a_i(x)` with `h(x) = Σ a_i(x) h(p_i)` for `h` harmonic on the cell.
pub fn target_coefficients(fractal: &Fractal, x: &Address, base_cell: &CellRef) -> Result<[f64; 3]> {
    let (u, v) = relative_position(fractal, x, base_cell)?;
    Ok([0, 1, 2].map(|i| {
        let mut e = [0.0; 3];
        e[i] = 1.0;
        fractal.harmonic().cell_boundary_values(e, &u)[v]
    }))
}

/// Enclosure of `M_B(f)`, integrating over `C_w` and every cut neighbor cell.
pub fn neighborhood_mean(
    engine: &mut HalfPlaneEngine<'_>,
    f: &impl PiecewiseHarmonic,
    spec: &CutoffSpec,
    tol: f64,
) -> Result<IntervalValue> {
    let fractal = engine.fractal();
    let nb = fractal.neighbor_cells(&spec.base_cell)?;
    let ones = Harmonic { fractal, h: HarmonicFunction::new([1.0; 3]) };
    let base = Region::Cell(spec.base_cell.clone());
    let mut num = integrate_region(engine, f, &base, tol)?;
    let mut den = integrate_region(engine, &ones, &base, tol)?;
    for i in 0..3 {
        if spec.c[i] == 0.0 {
            continue;
        }
        for (cell, v) in &nb[i] {
            let r = Region::Cutoff(CutoffRegion::new(cell.clone(), *v, spec.c[i])?);
            num = num + integrate_region(engine, f, &r, tol)?;
            den = den + integrate_region(engine, &ones, &r, tol)?;
        }
    }
    num.div(&den)
        .ok_or_else(|| Error::InvalidArgument(format!("neighborhood of {} has no mass", spec.base_cell)))
}

/// `max_j |M_B(h_j) - h_j(x)|` over the harmonic basis, as an upper bound.
pub fn mean_value_residual(engine: &mut HalfPlaneEngine<'_>, spec: &CutoffSpec, x: &Address) -> Result<f64> {
    let fractal = engine.fractal();
    let mut worst: f64 = 0.0;
    for j in 0..3 {
        let h = Harmonic { fractal, h: HarmonicFunction::basis(j) };
        let mean = neighborhood_mean(engine, &h, spec, COEFF_TOL)?;
        let d = mean - IntervalValue::point(harmonic_eval(fractal.harmonic(), h.h.boundary, x));
        worst = worst.max(d.lo.abs()).max(d.hi.abs());
    }
    Ok(worst)
}

struct Sector<'e, 'a> {
    engine: &'e mut HalfPlaneEngine<'a>,
    l: [usize; 3],
    target: [f64; 3],
    free: [usize; 2],
}

impl Sector<'_, '_> {
    fn spec(&self, u: [f64; 2]) -> [f64; 3] {
        let mut c = [0.0; 3];
        c[self.free[0]] = u[0];
        c[self.free[1]] = u[1];
        c
    }

    fn image(&mut self, u: [f64; 2], tol: f64) -> Result<[f64; 3]> {
        let c = self.spec(u);
        Ok(tmap(self.engine, self.l, c, tol)?.mid())
    }

    fn residual(&mut self, u: [f64; 2], tol: f64) -> Result<[f64; 2]> {
        let t = self.image(u, tol)?;
        Ok([t[self.free[0]] - self.target[self.free[0]], t[self.free[1]] - self.target[self.free[1]]])
    }

    fn grid_start(&mut self) -> Result<([f64; 2], f64)> {
        let mut best = ([0.0; 2], f64::INFINITY);
        for i in 0..GRID {
            for j in 0..GRID {
                let u = [i as f64 / (GRID - 1) as f64, j as f64 / (GRID - 1) as f64];
                let r = norm(self.residual(u, 1e-7)?);
                if r < best.1 {
                    best = (u, r);
                }
            }
        }
        Ok(best)
    }

    /// Damped Newton with a forward-difference Jacobian, clamped to `[0,1]^2`.
    fn newton(&mut self, start: [f64; 2]) -> Result<([f64; 2], f64)> {
        let mut u = start;
        let mut r = self.residual(u, COEFF_TOL)?;
        for _ in 0..NEWTON_ITERS {
            if norm(r) <= NEWTON_TOL * 1e-2 {
                break;
            }
            let mut jac = [[0.0; 2]; 2];
            for d in 0..2 {
                let h = if u[d] + FD_STEP <= 1.0 { FD_STEP } else { -FD_STEP };
                let mut v = u;
                v[d] += h;
                let rv = self.residual(v, COEFF_TOL)?;
                jac[0][d] = (rv[0] - r[0]) / h;
                jac[1][d] = (rv[1] - r[1]) / h;
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if det.abs() < 1e-14 {
                break;
            }
            let step = [
                -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
                -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
            ];
            let mut lambda = 1.0;
            let mut moved = false;
            while lambda > 1e-4 {
                let v = [(u[0] + lambda * step[0]).clamp(0.0, 1.0), (u[1] + lambda * step[1]).clamp(0.0, 1.0)];
                let rv = self.residual(v, COEFF_TOL)?;
                if norm(rv) < norm(r) {
                    (u, r, moved) = (v, rv, true);
                    break;
                }
                lambda /= 2.0;
            }
            if !moved {
                break;
            }
        }
        Ok((u, norm(r)))
    }

    /// Continuation along the curves `Γ_y = {T(c): c_big = y, c_small ∈ [0, y]}`:
    /// bisect on the angle about `T(0)` for each `y`, then on `y` by radius.
    fn sweep(&mut self) -> Result<[f64; 2]> {
        let (s, g) = (self.free[0], self.free[1]);
        let (s, g) = if self.target[s] <= self.target[g] { (s, g) } else { (g, s) };
        let small_first = s == self.free[0];
        let order = move |u_small: f64, u_big: f64| -> [f64; 2] {
            if small_first {
                [u_small, u_big]
            } else {
                [u_big, u_small]
            }
        };
        let plane = |t: [f64; 3]| [t[s], t[g]];
        let o = plane(self.image([0.0; 2], 1e-9)?);
        let a = plane(self.target);
        let cross = |p: [f64; 2]| (p[0] - o[0]) * (a[1] - o[1]) - (p[1] - o[1]) * (a[0] - o[0]);
        let radius = |p: [f64; 2]| ((p[0] - o[0]).powi(2) + (p[1] - o[1]).powi(2)).sqrt();
        let ra = radius(a);

        let on_ray = |this: &mut Self, y: f64| -> Result<(f64, [f64; 2])> {
            let at = |this: &mut Self, t: f64| -> Result<[f64; 2]> { Ok(plane(this.image(order(t * y, y), 1e-9)?)) };
            let (mut lo, mut hi) = (0.0, 1.0);
            let c_lo = cross(at(this, lo)?);
            let c_hi = cross(at(this, hi)?);
            if c_lo.signum() == c_hi.signum() {
                let t = if c_lo.abs() < c_hi.abs() { lo } else { hi };
                return Ok((t, at(this, t)?));
            }
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if cross(at(this, mid)?).signum() == c_lo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t = 0.5 * (lo + hi);
            Ok((t, at(this, t)?))
        };
        let (mut ylo, mut yhi) = (0.0, 1.0);
        for _ in 0..40 {
            let y = 0.5 * (ylo + yhi);
            let (_, p) = on_ray(self, y)?;
            if radius(p) < ra {
                ylo = y;
            } else {
                yhi = y;
            }
        }
        let y = 0.5 * (ylo + yhi);
        let (t, _) = on_ray(self, y)?;
        Ok(order(t * y, y))
    }
}

fn norm(r: [f64; 2]) -> f64 {
    r[0].abs().max(r[1].abs())
}

fn solve_all_junctions(engine: &mut HalfPlaneEngine<'_>, l: [usize; 3], target: [f64; 3]) -> Result<[f64; 3]> {
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| target[i].total_cmp(&target[j]).then(i.cmp(&j)));
    let mut best = f64::INFINITY;
    for zero in order {
        let free = match zero {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        };
        let mut sector = Sector { engine: &mut *engine, l, target, free };
        let (start, _) = sector.grid_start()?;
        let (u, r) = sector.newton(start)?;
        if r <= NEWTON_TOL {
            return Ok(sector.spec(u));
        }
        best = best.min(r);
        let swept = sector.sweep()?;
        let (u, r) = sector.newton(swept)?;
        if r <= NEWTON_TOL {
            return Ok(sector.spec(u));
        }
        best = best.min(r);
    }
    Err(Error::NotConverged { message: format!("no neighborhood reaches target {target:?}"), residual: best })
}

fn solve_one_nonjunction(
    engine: &mut HalfPlaneEngine<'_>,
    l: [usize; 3],
    z: usize,
    target: [f64; 3],
) -> Result<[f64; 3]> {
    let (i, j) = ((z + 1) % 3, (z + 2) % 3);
    // h(p_z) is the average of the other two boundary values
    let reduced = |a: [f64; 3], k: usize| a[k] + 0.5 * a[z];
    let k = if reduced(target, i) > reduced(target, j) || (reduced(target, i) == reduced(target, j) && i < j) {
        i
    } else {
        j
    };
    let want = reduced(target, k);
    let mut c = [0.0; 3];
    if want <= 0.5 {
        return Ok(c);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        c[k] = 0.5 * (lo + hi);
        let t = tmap(engine, l, c, COEFF_TOL)?.mid();
        if reduced(t, k) < want {
            lo = c[k];
        } else {
            hi = c[k];
        }
    }
    c[k] = 0.5 * (lo + hi);
    Ok(c)
}

/// A neighborhood `C_w ⊂ B ⊂ D_w` with `M_B(h) = h(x)` for every harmonic `h`,
/// verified to `tol` by integrating the harmonic basis over `B`.
pub fn solve_mvn(
    engine: &mut HalfPlaneEngine<'_>,
    x: &Address,
    base_cell: &CellRef,
    tol: f64,
) -> Result<MeanValueNeighborhood> {
    let fractal = engine.fractal();
    let nb = fractal.neighbor_cells(base_cell)?;
    let l = nb.each_ref().map(|v| v.len());
    let target = target_coefficients(fractal, x, base_cell)?;
    let missing: Vec<usize> = (0..3).filter(|&i| l[i] == 0).collect();
    let (c, case) = match missing.len() {
        0 => (solve_all_junctions(engine, l, target)?, NeighborhoodCase::AllJunctions),
        1 => (solve_one_nonjunction(engine, l, missing[0], target)?, NeighborhoodCase::OneNonjunction),
        _ => ([0.0; 3], NeighborhoodCase::TwoNonjunctions),
    };
    let spec = CutoffSpec::new(base_cell.clone(), c)?;
    let residual = mean_value_residual(engine, &spec, x)?;
    if residual > tol {
        return Err(Error::NotConverged {
            message: format!("mean value neighborhood of {x} in cell {base_cell}"),
            residual,
        });
    }
    let coefficients = cutoff_triple(engine, l, c, COEFF_TOL)?;
    Ok(MeanValueNeighborhood { spec, x: x.clone(), target, residual, coefficients, case })
}

/// The level-`k` cell named by the first `k` letters of `x`'s address, extended
/// through the corner maps fixing `q_v` when `k` exceeds the address length.
pub fn base_cell_at(fractal: &Fractal, x: &Address, k: usize) -> CellRef {
    let mut word: Vec<u8> = x.word().iter().copied().take(k).collect();
    let mut v = x.vertex();
    while word.len() < k {
        let (i, j) = fractal.corner(v);
        word.push(i as u8);
        v = j;
    }
    CellRef::new(word)
}

/// The least level at which the cell of `x` avoids `V_0`.
pub fn first_level(fractal: &Fractal, x: &Address) -> Result<usize> {
    if x.level() == 0 {
        return Err(Error::InvalidArgument(format!("{x} lies in V0")));
    }
    (1..=64)
        .find(|&k| !fractal.touches_boundary(&base_cell_at(fractal, x, k)))
        .ok_or_else(|| Error::InvalidArgument(format!("no cell of {x} avoids V0")))
}

/// Mean value neighborhoods `B_k(x)` for `k` in the range, starting no earlier
/// than [`first_level`].
pub fn mvn_sequence(
    engine: &mut HalfPlaneEngine<'_>,
    x: &Address,
    ks: RangeInclusive<usize>,
    tol: f64,
) -> Result<Vec<MeanValueNeighborhood>> {
    let fractal = engine.fractal();
    let k0 = first_level(fractal, x)?;
    (*ks.start().max(&k0)..=*ks.end())
        .map(|k| solve_mvn(engine, x, &base_cell_at(fractal, x, k), tol))
        .collect()
}

/// First `m` for which `φ_m` can fail to be harmonic on the cells that make up `B`.
pub fn first_nonharmonic_term(fractal: &Fractal, spec: &CutoffSpec) -> Result<usize> {
    let k = spec.base_cell.level();
    let mut lowest = k;
    for i in 0..3 {
        if spec.c[i] > 0.0 {
            lowest = lowest.min(fractal.address(&spec.base_cell.word, i)?.level());
        }
    }
    Ok(lowest.saturating_sub(1))
}

/// `M_B(φ_m) - φ_m(x)`.
pub fn phi_defect(engine: &mut HalfPlaneEngine<'_>, spec: &CutoffSpec, x: &Address, m: usize) -> Result<IntervalValue> {
    let fractal = engine.fractal();
    let mean = neighborhood_mean(engine, &Phi { fractal, m }, spec, 1e-9)?;
    Ok(mean - IntervalValue::point(phi_eval(fractal, m, x)?))
}

/// `-(1/15) Σ_{m=start}^{end} 5^{-m} (M_B(φ_m) - φ_m(x))`.
fn defect_sum(
    engine: &mut HalfPlaneEngine<'_>,
    spec: &CutoffSpec,
    x: &Address,
    start: usize,
    end: usize,
) -> Result<IntervalValue> {
    let mut sum = IntervalValue::point(0.0);
    for m in start..=end {
        sum = sum + phi_defect(engine, spec, x, m)?.scale(5f64.powi(-(m as i32)));
    }
    Ok(sum.scale(-1.0 / 15.0))
}

/// Enclosure of `c_B = M_B(v) - v(x)` with the series cut after `φ_{M}`.
pub fn cb_constant(engine: &mut HalfPlaneEngine<'_>, mvn: &MeanValueNeighborhood, m_max: usize) -> Result<IntervalValue> {
    let fractal = engine.fractal();
    fractal.require_sg("c_B")?;
    let k = mvn.spec.base_cell.level();
    if m_max < k + 6 {
        return Err(Error::InvalidArgument(format!("truncation M={m_max} must be at least k+6={}", k + 6)));
    }
    // 0 ≤ φ_m ≤ 1 bounds each neglected defect by 1
    let tail = 5f64.powi(-(m_max as i32)) / 60.0;
    let cb = defect_sum(engine, &mvn.spec, &mvn.x, 0, m_max)? + IntervalValue::new(-tail, tail);
    if cb.lo <= 0.0 {
        return Err(Error::NotConverged { message: format!("c_B enclosure {cb} is not positive"), residual: cb.width() });
    }
    Ok(cb)
}

/// Functions for the convergence experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFunction {
    Harmonic([f64; 3]),
    V,
    /// The solution of `Δu = h`, `u = 0` on `V_0`, for harmonic `h`.
    GreenOfHarmonic([f64; 3]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub k: usize,
    pub spec: CutoffSpec,
    pub residual: f64,
    pub cb: IntervalValue,
    /// `M_B(u) - u(x)`.
    pub numerator: IntervalValue,
    pub ratio: IntervalValue,
}

/// `(M_{B_k}(u) - u(x)) / c_{B_k}` for each `k`; one engine per level, so
/// rows are independent of the thread count.
pub fn convergence_experiment(
    fractal: &Fractal,
    u: TestFunction,
    x: &Address,
    ks: RangeInclusive<usize>,
    m_max: usize,
    tol: f64,
) -> Result<Vec<ConvergenceRow>> {
    fractal.require_sg("the convergence experiment")?;
    let k0 = first_level(fractal, x)?;
    let levels: Vec<usize> = (*ks.start().max(&k0)..=*ks.end()).collect();
    let sampled = match u {
        TestFunction::GreenOfHarmonic(h) => {
            if x.level() > m_max {
                return Err(Error::InvalidArgument(format!("{x} is not in V_{m_max}")));
            }
            let mesh = std::sync::Arc::new(Mesh::build(fractal, m_max)?);
            Some(GreenPotential::new(fractal, mesh, m_max, h)?)
        }
        _ => None,
    };
    levels
        .par_iter()
        .map(|&k| {
            let mut engine = HalfPlaneEngine::new(fractal);
            let mvn = solve_mvn(&mut engine, x, &base_cell_at(fractal, x, k), tol)?;
            let cb = cb_constant(&mut engine, &mvn, m_max.max(k + 10))?;
            let numerator = match (u, &sampled) {
                (TestFunction::Harmonic(h), _) => {
                    let f = Harmonic { fractal, h: HarmonicFunction::new(h) };
                    neighborhood_mean(&mut engine, &f, &mvn.spec, COEFF_TOL)?
                        - IntervalValue::point(harmonic_eval(fractal.harmonic(), h, x))
                }
                (TestFunction::V, _) => cb,
                (TestFunction::GreenOfHarmonic(_), Some(s)) => {
                    if s.leaf_level() < k + 2 {
                        return Err(Error::InvalidArgument(format!("depth {} is too coarse for k={k}", s.leaf_level())));
                    }
                    let at_x = s.nodal().get(x).ok_or_else(|| Error::InvalidArgument(format!("{x} not sampled")))?;
                    neighborhood_mean(&mut engine, s, &mvn.spec, 1e-9)?
                        - IntervalValue::point(at_x)
                }
                (TestFunction::GreenOfHarmonic(_), None) => unreachable!(),
            };
            let ratio = numerator
                .div(&cb)
                .ok_or_else(|| Error::NotConverged { message: "c_B straddles 0".into(), residual: cb.width() })?;
            Ok(ConvergenceRow { k, spec: mvn.spec, residual: mvn.residual, cb, numerator, ratio })
        })
        .collect()
}

/// The part of `c_B` from terms below [`first_nonharmonic_term`]; zero for an
/// exact mean value neighborhood.
pub fn harmonic_terms(engine: &mut HalfPlaneEngine<'_>, mvn: &MeanValueNeighborhood) -> Result<IntervalValue> {
    let start = first_nonharmonic_term(engine.fractal(), &mvn.spec)?;
    if start == 0 {
        return Ok(IntervalValue::point(0.0));
    }
    defect_sum(engine, &mvn.spec, &mvn.x, 0, start - 1)
}
