//! Splines, the truncated Green's function and the series for `v`.
//!
//! Everything here is specific to the Sierpinski gasket. Points are located by
//! address prefix: a point of level `L > m` lies in exactly one `m`-cell, the
//! one named by the first `m` letters of its canonical word.

use serde::{Deserialize, Serialize};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fractal::{Address, CellRef, Fractal, Mesh, VertexFunction};
use crate::harmonic::{gram_matrix, harmonic_eval, poisson_solve};
use crate::integrate::PiecewiseHarmonic;
use crate::interval::IntervalValue;

/// The piecewise harmonic spline of level `m` equal to `δ_z` on `V_m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SplineRef {
    pub z: Address,
    pub m: usize,
}

/// Truncation level and a bound on the neglected tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesTruncation {
    pub m: usize,
    pub tail_bound: f64,
}

impl SeriesTruncation {
    /// `(1/15) Σ_{m > M} 5^{-m}`, the most the `v` series can lose after level `M`.
    pub fn for_v(m: usize) -> Self {
        SeriesTruncation { m, tail_bound: 5f64.powi(-(m as i32)) / 60.0 }
    }
}

/// Value at `x` of the harmonic function on the `m`-cell containing `x` with the
/// given values at that cell's boundary points. `None` when `x ∈ V_m`.
fn extend_in_cell(fractal: &Fractal, m: usize, x: &Address, data: impl Fn(&Address) -> f64) -> Option<f64> {
    if x.level() <= m {
        return None;
    }
    let cell = CellRef::new(x.word()[..m].to_vec());
    let b = fractal.boundary_points(&cell).map(|a| data(&a));
    Some(fractal.harmonic().cell_boundary_values(b, &x.word()[m..])[x.vertex()])
}

pub fn spline_eval(fractal: &Fractal, spline: &SplineRef, x: &Address) -> Result<f64> {
    fractal.require_sg("splines")?;
    Ok(extend_in_cell(fractal, spline.m, x, |a| f64::from(*a == spline.z))
        .unwrap_or(f64::from(*x == spline.z)))
}

/// `∫ ψ_z^{(m)} dμ`: a third of the measure of each `m`-cell at `z`.
pub fn spline_integral(fractal: &Fractal, spline: &SplineRef) -> Result<f64> {
    fractal.require_sg("splines")?;
    if spline.z.level() > spline.m {
        return Err(Error::InvalidArgument(format!("{} is not in V_{}", spline.z, spline.m)));
    }
    let cells = fractal.cells_containing(&spline.z, spline.m)?;
    Ok(cells.len() as f64 / 3f64.powi(spline.m as i32 + 1))
}

/// The kernel coefficient `g(z, z')` for `z, z' ∈ V_{m+1} \ V_m`.
pub fn g_coeff(z: &Address, z2: &Address, m: usize) -> Result<f64> {
    if z.level() != m + 1 || z2.level() != m + 1 {
        return Err(Error::InvalidArgument(format!("{z} and {z2} must both lie in V_{} \\ V_{m}", m + 1)));
    }
    let scale = 0.6f64.powi(m as i32);
    Ok(if z == z2 {
        9.0 / 50.0 * scale
    } else if z.word()[..m] == z2.word()[..m] {
        3.0 / 50.0 * scale
    } else {
        0.0
    })
}

/// `(z, ψ_z^{(m+1)}(x))` for the points `z ∈ V_{m+1} \ V_m` whose spline is nonzero at `x`.
fn active_splines(fractal: &Fractal, m: usize, x: &Address) -> Vec<(Address, f64)> {
    if x.level() <= m {
        return Vec::new();
    }
    if x.level() == m + 1 {
        return vec![(x.clone(), 1.0)];
    }
    let cell = CellRef::new(x.word()[..m + 1].to_vec());
    fractal
        .boundary_points(&cell)
        .into_iter()
        .filter(|z| z.level() == m + 1)
        .map(|z| {
            let v = extend_in_cell(fractal, m + 1, x, |a| f64::from(*a == z)).unwrap();
            (z, v)
        })
        .collect()
}

/// `G_M(x, y) = Σ_{m ≤ M} Σ_{z, z'} g(z, z') ψ_z^{(m+1)}(x) ψ_{z'}^{(m+1)}(y)`.
pub fn green_eval(fractal: &Fractal, x: &Address, y: &Address, m_max: usize) -> Result<f64> {
    fractal.require_sg("the Green's function")?;
    let mut total = 0.0;
    for m in 0..=m_max {
        let zx = active_splines(fractal, m, x);
        if zx.is_empty() {
            continue;
        }
        let zy = active_splines(fractal, m, y);
        for (z, a) in &zx {
            for (z2, b) in &zy {
                total += g_coeff(z, z2, m)? * a * b;
            }
        }
    }
    Ok(total)
}

/// `φ_m(x) = Σ_{z ∈ V_{m+1} \ V_m} ψ_z^{(m+1)}(x)`.
pub fn phi_eval(fractal: &Fractal, m: usize, x: &Address) -> Result<f64> {
    fractal.require_sg("φ_m")?;
    Ok(phi_unchecked(fractal, m, x))
}

fn phi_unchecked(fractal: &Fractal, m: usize, x: &Address) -> f64 {
    match x.level() {
        l if l <= m => 0.0,
        l if l == m + 1 => 1.0,
        _ => extend_in_cell(fractal, m + 1, x, |a| f64::from(a.level() == m + 1)).unwrap(),
    }
}

/// The partial sum `-(1/15) Σ_{m ≤ M} 5^{-m} φ_m(x)`.
pub fn v_partial(fractal: &Fractal, x: &Address, m_max: usize) -> f64 {
    let last = m_max.min(x.level().saturating_sub(1));
    -(0..=last)
        .map(|m| 5f64.powi(-(m as i32)) * phi_unchecked(fractal, m, x))
        .sum::<f64>()
        / 15.0
}

/// Enclosure of `v(x)`; exact (up to rounding) for `x ∈ V_{M+1}` because
/// `φ_m` vanishes on `V_m`.
pub fn v_eval(fractal: &Fractal, x: &Address, m_max: usize) -> Result<IntervalValue> {
    fractal.require_sg("v")?;
    let s = v_partial(fractal, x, m_max);
    let point = IntervalValue::around(s, 4);
    if x.level() <= m_max + 1 {
        Ok(point)
    } else {
        let tail = SeriesTruncation::for_v(m_max).tail_bound;
        Ok(point + IntervalValue::new(-tail, 0.0))
    }
}

/// `v` on `V_level` of a mesh, exactly (each point needs finitely many terms).
pub fn v_vertex_function(fractal: &Fractal, mesh: Arc<Mesh>, level: usize) -> Result<VertexFunction> {
    fractal.require_sg("v")?;
    VertexFunction::from_fn(mesh, level, |a| v_partial(fractal, a, usize::MAX - 1))
}

/// `∫_{F_u(K)} φ_m dμ`.
///
/// For `|u| ≤ m` each `(m+1)`-cell carries the values `1, 1, 0`, giving
/// `μ(F_u)·2/3`; deeper cells see `φ_m` as a harmonic function.
pub fn phi_cell_integral(fractal: &Fractal, m: usize, cell: &CellRef) -> Result<f64> {
    fractal.require_sg("φ_m")?;
    Ok(phi_cell_integral_unchecked(fractal, m, cell))
}

fn phi_cell_integral_unchecked(fractal: &Fractal, m: usize, cell: &CellRef) -> f64 {
    let mu = fractal.cell_measure(cell);
    if cell.level() <= m {
        mu * 2.0 / 3.0
    } else {
        let b = fractal.boundary_points(cell).map(|a| phi_unchecked(fractal, m, &a));
        mu * (b[0] + b[1] + b[2]) / 3.0
    }
}

/// `φ_m` as a piecewise harmonic function for region integrals.
pub struct Phi<'a> {
    pub fractal: &'a Fractal,
    pub m: usize,
}

impl PiecewiseHarmonic for Phi<'_> {
    fn leaf_level(&self) -> usize {
        self.m + 1
    }

    fn cell_values(&self, cell: &CellRef) -> [f64; 3] {
        self.fractal
            .boundary_points(cell)
            .map(|a| phi_unchecked(self.fractal, self.m, &a))
    }

    fn cell_integral(&self, cell: &CellRef) -> f64 {
        phi_cell_integral_unchecked(self.fractal, self.m, cell)
    }
}

/// `u = -∫ G(·, y) h(y) dμ(y)` for harmonic `h`: the solution of `Δu = h`
/// vanishing on `V_0`.
///
/// Nodal values on `V_M` come from the weak form with exact spline loads
/// `∫ h ψ_x`. On a cell `C` of level `m`, `u - H_C u` is `5^{-m}` times the
/// same problem pulled back to `K`, so `∫_C (u - H_C u) = -15^{-m} Σ h(p_i) / 54`
/// (using `∫_K h_j v = -1/54`) and `|u - H_C u| ≤ 5^{-m} max|h| / 15` on `C`.
pub struct GreenPotential<'a> {
    fractal: &'a Fractal,
    h: [f64; 3],
    u: VertexFunction,
}

impl<'a> GreenPotential<'a> {
    pub fn new(fractal: &'a Fractal, mesh: Arc<Mesh>, level: usize, h: [f64; 3]) -> Result<Self> {
        fractal.require_sg("the Green potential")?;
        if level > mesh.level() {
            return Err(Error::InvalidArgument(format!("mesh has depth {}, not {level}", mesh.level())));
        }
        let gram = gram_matrix(fractal);
        let hv: Vec<f64> = mesh.addresses()[..mesh.count_at(level)]
            .iter()
            .map(|a| harmonic_eval(fractal.harmonic(), h, a))
            .collect();
        let mu = 3f64.powi(-(level as i32));
        let mut load = vec![0.0; hv.len()];
        for c in mesh.cells(level) {
            let b = c.map(|id| hv[id as usize]);
            for v in 0..3 {
                load[c[v] as usize] += mu * (0..3).map(|j| b[j] * gram[j][v]).sum::<f64>();
            }
        }
        let u = poisson_solve(fractal, &mesh, level, |x| load[x], [0.0; 3])?;
        Ok(GreenPotential { fractal, h, u })
    }

    /// Values on `V_M`.
    pub fn nodal(&self) -> &VertexFunction {
        &self.u
    }

    fn corner_values(&self, cell: &CellRef) -> [f64; 3] {
        if cell.level() <= self.u.level() {
            self.u.cell_values(cell)
        } else {
            let m = self.u.level();
            let top = CellRef::new(cell.word[..m].to_vec());
            self.fractal
                .harmonic()
                .cell_boundary_values(self.u.cell_values(&top), &cell.word[m..])
        }
    }
}

impl PiecewiseHarmonic for GreenPotential<'_> {
    fn leaf_level(&self) -> usize {
        self.u.level()
    }

    fn cell_values(&self, cell: &CellRef) -> [f64; 3] {
        self.corner_values(cell)
    }

    /// Exact for cells of level at most `M`.
    fn cell_integral(&self, cell: &CellRef) -> f64 {
        let m = cell.level() as i32;
        let u = self.corner_values(cell);
        let h = self.fractal.harmonic().cell_boundary_values(self.h, &cell.word);
        self.fractal.cell_measure(cell) * (u[0] + u[1] + u[2]) / 3.0 - 15f64.powi(-m) * (h[0] + h[1] + h[2]) / 54.0
    }

    fn leaf_defect(&self, cell: &CellRef) -> f64 {
        let h = self.fractal.harmonic().cell_boundary_values(self.h, &cell.word);
        5f64.powi(-(cell.level() as i32)) * h.iter().fold(0.0f64, |a, x| a.max(x.abs())) / 15.0
    }
}
