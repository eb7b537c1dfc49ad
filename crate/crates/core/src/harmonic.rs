//! Harmonic structure, energies, Laplacians and the discrete Dirichlet solver.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fractal::{Address, CellRef, Fractal, Mesh, VertexFunction};

pub type Matrix3 = [[f64; 3]; 3];

/// Renormalization factor and the extension matrices `A_i`.
///
/// `A_i` maps `(h(q0), h(q1), h(q2))` to `(h(F_i q0), h(F_i q1), h(F_i q2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicStructure {
    pub r: f64,
    pub extension: Vec<Matrix3>,
}

/// A harmonic function given by its values on `V0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicFunction {
    pub boundary: [f64; 3],
}

impl HarmonicFunction {
    pub fn new(boundary: [f64; 3]) -> Self {
        HarmonicFunction { boundary }
    }

    /// The basis function equal to 1 at `q_j` and 0 at the other boundary points.
    pub fn basis(j: usize) -> Self {
        let mut b = [0.0; 3];
        b[j] = 1.0;
        HarmonicFunction { boundary: b }
    }
}

impl HarmonicStructure {
    pub(crate) fn placeholder(n: usize) -> Self {
        HarmonicStructure { r: f64::NAN, extension: vec![[[0.0; 3]; 3]; n] }
    }

    pub(crate) fn new(fractal: &Fractal) -> Result<Self> {
        let r = solve_renormalization(fractal)?;
        Ok(HarmonicStructure { r, extension: solve_extension(fractal, r) })
    }

    /// Boundary values of `h` on the cell `F_w(K)`.
    pub fn cell_boundary_values(&self, h: [f64; 3], word: &[u8]) -> [f64; 3] {
        word.iter().fold(h, |vals, &i| mat_vec(&self.extension[i as usize], vals))
    }

    /// `A_{w_m} ⋯ A_{w_1}`: boundary values of K to boundary values of `F_w(K)`.
    pub fn word_matrix(&self, word: &[u8]) -> Matrix3 {
        word.iter()
            .fold(IDENTITY, |acc, &i| mat_mul(&self.extension[i as usize], &acc))
    }
}

pub const IDENTITY: Matrix3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub fn mat_vec(a: &Matrix3, v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|r| a[r][0] * v[0] + a[r][1] * v[1] + a[r][2] * v[2])
}

pub fn mat_mul(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    let mut out = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            out[r][c] = (0..3).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

/// Node of the level-1 network: boundary points are `0..3`, interior classes follow.
fn v1_node(fractal: &Fractal, i: usize, j: usize) -> usize {
    match fractal.boundary_label(i, j) {
        Some(l) => l,
        None => 3 + fractal.v1_class_of(i, j).unwrap(),
    }
}

/// Graph Laplacian of the level-1 network with conductance `cond` on every cell edge.
fn level1_laplacian(fractal: &Fractal, cond: f64) -> Vec<Vec<f64>> {
    let size = 3 + fractal.interior_v1_count();
    let mut lap = vec![vec![0.0; size]; size];
    for i in 0..fractal.n_maps() {
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    let (x, y) = (v1_node(fractal, i, a), v1_node(fractal, i, b));
                    lap[x][y] -= cond;
                    lap[x][x] += cond;
                }
            }
        }
    }
    lap
}

/// Dense Gaussian elimination with partial pivoting; `b` holds several right-hand sides.
pub(crate) fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            for k in 0..b[row].len() {
                b[row][k] -= f * b[col][k];
            }
        }
    }
    for col in (0..n).rev() {
        for k in 0..b[col].len() {
            let s: f64 = (col + 1..n).map(|j| a[col][j] * b[j][k]).sum();
            b[col][k] = (b[col][k] - s) / a[col][col];
        }
    }
    Some(b)
}

/// `-L_ii^{-1} L_ib`: interior values as combinations of boundary values.
fn harmonic_interior(lap: &[Vec<f64>]) -> Vec<[f64; 3]> {
    let size = lap.len();
    let inner: Vec<Vec<f64>> = (3..size).map(|x| lap[x][3..].to_vec()).collect();
    let rhs: Vec<Vec<f64>> = (3..size).map(|x| (0..3).map(|l| -lap[x][l]).collect()).collect();
    if inner.is_empty() {
        return Vec::new();
    }
    let sol = dense_solve(inner, rhs).expect("level-1 network is connected");
    sol.into_iter().map(|row| [row[0], row[1], row[2]]).collect()
}

/// Schur complement of the level-1 Laplacian onto `V0`.
fn boundary_trace(fractal: &Fractal, cond: f64) -> Matrix3 {
    let lap = level1_laplacian(fractal, cond);
    let interior = harmonic_interior(&lap);
    let mut s = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            s[a][b] = lap[a][b]
                + interior
                    .iter()
                    .enumerate()
                    .map(|(x, row)| lap[a][3 + x] * row[b])
                    .sum::<f64>();
        }
    }
    s
}

/// Extension matrices of the energy-minimizing extension from `V0` to `V1`.
pub fn solve_extension(fractal: &Fractal, r: f64) -> Vec<Matrix3> {
    let lap = level1_laplacian(fractal, 1.0 / r);
    let interior = harmonic_interior(&lap);
    (0..fractal.n_maps())
        .map(|i| {
            [0, 1, 2].map(|j| match fractal.boundary_label(i, j) {
                Some(l) => IDENTITY[l],
                None => interior[fractal.v1_class_of(i, j).unwrap()],
            })
        })
        .collect()
}

/// The `r` in (0, 1) for which the level-1 network with conductance `1/r`
/// has the unit triangle as its trace on `V0`.
pub fn solve_renormalization(fractal: &Fractal) -> Result<f64> {
    let s = boundary_trace(fractal, 1.0);
    let off = [-s[0][1], -s[0][2], -s[1][2]];
    if off.iter().any(|&c| (c - off[0]).abs() > 1e-12 * off[0].abs()) {
        return Err(Error::NoRenormalization(format!(
            "boundary trace {off:?} is not a multiple of the unit triangle"
        )));
    }
    let k = off[0];
    // effective conductance of each boundary pair relative to the unit triangle
    let f = |r: f64| k / r - 1.0;
    let (mut lo, mut hi) = (1e-6, 1.0 - 1e-6);
    if f(lo) * f(hi) > 0.0 {
        return Err(Error::NoRenormalization(format!("effective conductance {k}")));
    }
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Value at `addr` of the harmonic function with boundary values `h`.
pub fn harmonic_eval(structure: &HarmonicStructure, h: [f64; 3], addr: &Address) -> f64 {
    structure.cell_boundary_values(h, addr.word())[addr.vertex()]
}

/// `r^{-m} Σ (f(x) - f(y))²` over the edges of `Γ_m`.
pub fn graph_energy(structure: &HarmonicStructure, f: &VertexFunction) -> f64 {
    let m = f.level();
    let sum: f64 = f
        .mesh()
        .cells(m)
        .iter()
        .map(|c| {
            let v = c.map(|id| f.value(id as usize));
            (v[0] - v[1]).powi(2) + (v[1] - v[2]).powi(2) + (v[0] - v[2]).powi(2)
        })
        .sum();
    sum * structure.r.powi(-(m as i32))
}

/// `Σ_{y ~_m x} (f(y) - f(x))` on `Γ_m`, `m` the level of `f`.
pub fn discrete_laplacian(fractal: &Fractal, f: &VertexFunction, x: &Address) -> Result<f64> {
    laplacian_at_level(fractal, |a| f.get(a), x, f.level())
}

fn laplacian_at_level(
    fractal: &Fractal,
    f: impl Fn(&Address) -> Option<f64>,
    x: &Address,
    m: usize,
) -> Result<f64> {
    if x.level() == 0 {
        return Err(Error::InvalidArgument(format!("{x} is a boundary point")));
    }
    if x.level() > m {
        return Err(Error::InvalidArgument(format!("{x} is not in V_{m}")));
    }
    let missing = |a: &Address| Error::InvalidArgument(format!("function undefined at {a}"));
    let fx = f(x).ok_or_else(|| missing(x))?;
    let mut sum = 0.0;
    for (cell, v) in fractal.cells_containing(x, m)? {
        for u in (0..3).filter(|&u| u != v) {
            let y = fractal.canonical(cell.word.clone(), u as u8);
            sum += f(&y).ok_or_else(|| missing(&y))? - fx;
        }
    }
    Ok(sum)
}

/// `(m, (3/2)·5^m·Δ_m f(x))` for every level `m` from the level of `x` to the level of `f`.
pub fn laplacian_estimate(fractal: &Fractal, f: &VertexFunction, x: &Address) -> Result<Vec<(usize, f64)>> {
    fractal.require_sg("pointwise Laplacian constants")?;
    (x.level().max(1)..=f.level())
        .map(|m| {
            let d = laplacian_at_level(fractal, |a| f.get(a), x, m)?;
            Ok((m, 1.5 * 5f64.powi(m as i32) * d))
        })
        .collect()
}

/// Local normal derivative sequence at boundary vertex `vertex` of `cell`:
/// `(m, Σ r^{-m} (u(p) - u(y)))` over the two `Γ_m` neighbors `y` of `p` inside the cell.
pub fn normal_derivative(
    fractal: &Fractal,
    f: &VertexFunction,
    cell: &CellRef,
    vertex: usize,
) -> Result<Vec<(usize, f64)>> {
    normal_derivative_with(fractal, |a| f.get(a), cell, vertex, f.level())
}

/// As [`normal_derivative`] with the function given pointwise on addresses.
pub fn normal_derivative_with(
    fractal: &Fractal,
    f: impl Fn(&Address) -> Option<f64>,
    cell: &CellRef,
    vertex: usize,
    max_level: usize,
) -> Result<Vec<(usize, f64)>> {
    let r = fractal.harmonic().r;
    let p = fractal.canonical(cell.word.clone(), vertex as u8);
    let missing = |a: &Address| Error::InvalidArgument(format!("function undefined at {a}"));
    let fp = f(&p).ok_or_else(|| missing(&p))?;
    let (mut word, mut v) = (cell.word.clone(), vertex);
    let mut out = Vec::new();
    for m in cell.level()..=max_level {
        if m > cell.level() {
            let (i, j) = fractal.corner(v);
            word.push(i as u8);
            v = j;
        }
        let mut sum = 0.0;
        for u in (0..3).filter(|&u| u != v) {
            let y = fractal.canonical(word.clone(), u as u8);
            sum += fp - f(&y).ok_or_else(|| missing(&y))?;
        }
        out.push((m, sum * r.powi(-(m as i32))));
    }
    Ok(out)
}

/// Solves `(3/2)·5^m·Δ_m u = g` on `V_m \ V0` with `u = boundary` on `V0`.
///
/// Vertices are eliminated in descending id order; on the gasket this keeps
/// all fill inside the union of the graphs `Γ_k`, `k ≤ m`.
pub fn dirichlet_solve(fractal: &Fractal, g: &VertexFunction, boundary: [f64; 3]) -> Result<VertexFunction> {
    fractal.require_sg("discrete Dirichlet solve")?;
    let m = g.level();
    // lumped load: g(x) times ∫ψ_x = 2/3^{m+1}
    let lump = 2.0 / 3f64.powi(m as i32 + 1);
    poisson_solve(fractal, g.mesh(), m, |x| lump * g.value(x), boundary)
}

/// Nodal values on `V_m` of the solution of `Δu = f`, `u = boundary` on `V0`,
/// given the loads `∫ f ψ_x^{(m)} dμ` of the level-`m` splines.
pub fn poisson_solve(
    fractal: &Fractal,
    mesh: &Arc<Mesh>,
    m: usize,
    load: impl Fn(usize) -> f64,
    boundary: [f64; 3],
) -> Result<VertexFunction> {
    fractal.require_sg("discrete Dirichlet solve")?;
    if m > fractal.depth_cap() {
        return Err(Error::DepthCap { depth: m, cap: fractal.depth_cap() });
    }
    if m > mesh.level() {
        return Err(Error::InvalidArgument(format!("mesh has depth {}, not {m}", mesh.level())));
    }
    let n = mesh.count_at(m);
    let adj = mesh.adjacency(m);
    let scale = 0.6f64.powi(m as i32);

    // rows of the interior system deg·u(x) - Σ u(y) = -(3/5)^m ∫ f ψ_x, indexed by id - 3
    let mut rows: Vec<BTreeMap<usize, f64>> = Vec::with_capacity(n.saturating_sub(3));
    let mut rhs = vec![0.0; n.saturating_sub(3)];
    for x in 3..n {
        let mut row = BTreeMap::new();
        row.insert(x - 3, adj[x].len() as f64);
        let mut b = -scale * load(x);
        for &y in &adj[x] {
            if y < 3 {
                b += boundary[y];
            } else {
                *row.entry(y - 3).or_insert(0.0) -= 1.0;
            }
        }
        rows.push(row);
        rhs[x - 3] = b;
    }
    let size = rhs.iter().fold(0.0f64, |acc, b| acc.max(b.abs())).max(f64::MIN_POSITIVE);
    let original = rows.clone();
    let factor = SparseFactor::new(rows);
    let mut u = factor.solve(&rhs);
    for _ in 0..5 {
        let res: Vec<f64> = original
            .iter()
            .zip(&rhs)
            .map(|(row, b)| b - row.iter().map(|(&j, &a)| a * u[j]).sum::<f64>())
            .collect();
        let worst = res.iter().fold(0.0f64, |acc, r| acc.max(r.abs()));
        if worst <= 1e-15 * size {
            break;
        }
        let du = factor.solve(&res);
        for (a, d) in u.iter_mut().zip(du) {
            *a += d;
        }
    }
    let mut values = boundary.to_vec();
    values.extend(u);
    VertexFunction::new(mesh.clone(), m, values)
}

/// `∫ h_i h_j dμ` for the harmonic basis, the fixed point of
/// `G = w Σ_k A_k^T G A_k` normalized by `Σ_ij G_ij = 1`.
pub fn gram_matrix(fractal: &Fractal) -> Matrix3 {
    let ext = &fractal.harmonic().extension;
    let w = fractal.descriptor().measure_weight();
    let mut g = [[1.0 / 9.0; 3]; 3];
    for _ in 0..400 {
        let mut next = [[0.0; 3]; 3];
        for a in ext {
            for i in 0..3 {
                for j in 0..3 {
                    for p in 0..3 {
                        for q in 0..3 {
                            next[i][j] += w * a[p][i] * g[p][q] * a[q][j];
                        }
                    }
                }
            }
        }
        let total: f64 = next.iter().flatten().sum();
        let next = next.map(|r| r.map(|x| x / total));
        let change = (0..9).map(|k| (next[k / 3][k % 3] - g[k / 3][k % 3]).abs()).fold(0.0, f64::max);
        g = next;
        if change < 1e-17 {
            break;
        }
    }
    g
}

/// Symmetric elimination in descending index order.
struct SparseFactor {
    pivots: Vec<f64>,
    /// For pivot `k`: the entries `(i, a_ik)` with `i < k` at elimination time.
    lower: Vec<Vec<(usize, f64)>>,
}

impl SparseFactor {
    fn new(mut rows: Vec<BTreeMap<usize, f64>>) -> Self {
        let n = rows.len();
        let mut pivots = vec![0.0; n];
        let mut lower = vec![Vec::new(); n];
        for k in (0..n).rev() {
            let row = std::mem::take(&mut rows[k]);
            let akk = row[&k];
            let below: Vec<(usize, f64)> = row.range(..k).map(|(&i, &a)| (i, a)).collect();
            for &(i, aik) in &below {
                let f = aik / akk;
                for &(j, akj) in &below {
                    *rows[i].entry(j).or_insert(0.0) -= f * akj;
                }
                rows[i].remove(&k);
            }
            pivots[k] = akk;
            lower[k] = below;
        }
        SparseFactor { pivots, lower }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut y = b.to_vec();
        for k in (0..n).rev() {
            let yk = y[k];
            for &(i, aik) in &self.lower[k] {
                y[i] -= aik / self.pivots[k] * yk;
            }
        }
        let mut x = vec![0.0; n];
        for k in 0..n {
            let s: f64 = self.lower[k].iter().map(|&(i, aik)| aik * x[i]).sum();
            x[k] = (y[k] - s) / self.pivots[k];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gasket_extension_is_the_one_fifth_two_fifths_rule() {
        let sg = Fractal::builtin("sg").unwrap();
        let a0 = sg.harmonic().extension[0];
        let want = [[1.0, 0.0, 0.0], [0.4, 0.4, 0.2], [0.4, 0.2, 0.4]];
        for r in 0..3 {
            for c in 0..3 {
                assert!((a0[r][c] - want[r][c]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sparse_factor_matches_dense_solve() {
        let a = [[4.0, -1.0, 0.0], [-1.0, 4.0, -1.0], [0.0, -1.0, 3.0]];
        let rows = a
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(j, &v)| (j, v)).collect())
            .collect();
        let x = SparseFactor::new(rows).solve(&[1.0, 2.0, 3.0]);
        let dense = dense_solve(
            a.iter().map(|r| r.to_vec()).collect(),
            vec![vec![1.0], vec![2.0], vec![3.0]],
        )
        .unwrap();
        for k in 0..3 {
            assert!((x[k] - dense[k][0]).abs() < 1e-14);
        }
    }
}
