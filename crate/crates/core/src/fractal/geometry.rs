//! Exact barycentric description of the contractions.
//!
//! Every built-in map acts on barycentric coordinates (relative to
//! `q0, q1, q2`) by a rational matrix. Cut lines perpendicular to a symmetry
//! axis are level sets of one barycentric coordinate, and each map pulls such a
//! level set back to a level set of a single coordinate. The cutoff integrals
//! in [`crate::integrate`] run entirely on this representation.

use super::descriptor::{AffineMap, PcfDescriptor};
use crate::error::{Error, Result};

/// How `λ_p ∘ F_i` reads in the coordinates of the cell: `alpha * λ_target + beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pullback {
    pub target: usize,
    pub alpha: f64,
    pub beta: f64,
    /// `alpha` and `beta` as numerators over [`ExactGeometry::den`].
    pub alpha_num: i64,
    pub beta_num: i64,
}

#[derive(Debug, Clone)]
pub struct ExactGeometry {
    /// Common denominator of all barycentric map entries.
    pub den: i64,
    /// `bary[i][r][c] / den` is `λ_r(F_i(q_c))`.
    pub bary: Vec<[[i64; 3]; 3]>,
    /// Vertices of a convex polygon containing `K`, as numerators over `den`.
    pub hull: Vec<[i64; 3]>,
    pub pull: Vec<[Pullback; 3]>,
    /// `min over K of λ_p`, the same for all `p` under D3 symmetry.
    pub lambda_min: f64,
    pub lambda_min_num: i64,
}

impl ExactGeometry {
    pub fn new(desc: &PcfDescriptor) -> Result<Self> {
        let q = desc.boundary;
        let mut floats = Vec::with_capacity(desc.maps.len());
        for m in &desc.maps {
            let mut cols = [[0.0; 3]; 3];
            for (c, qc) in q.iter().enumerate() {
                let lam = barycentric(&q, m.apply(*qc));
                for r in 0..3 {
                    cols[r][c] = lam[r];
                }
            }
            floats.push(cols);
        }
        let den = (1..=12i64)
            .find(|&d| {
                floats
                    .iter()
                    .flat_map(|m| m.iter().flatten())
                    .all(|&x| (x * d as f64 - (x * d as f64).round()).abs() < 1e-9)
            })
            .ok_or_else(|| {
                Error::InvalidDescriptor("maps are not rational in barycentric coordinates".into())
            })?;
        let bary: Vec<[[i64; 3]; 3]> = floats
            .iter()
            .map(|m| {
                let mut out = [[0i64; 3]; 3];
                for r in 0..3 {
                    for c in 0..3 {
                        out[r][c] = (m[r][c] * den as f64).round() as i64;
                    }
                }
                out
            })
            .collect();

        let mut pull = Vec::with_capacity(bary.len());
        for m in &bary {
            let mut row_pulls = [Pullback { target: 0, alpha: 0.0, beta: 0.0, alpha_num: 0, beta_num: 0 }; 3];
            for (p, slot) in row_pulls.iter_mut().enumerate() {
                *slot = pullback_of_row(m[p], den).ok_or_else(|| {
                    Error::InvalidDescriptor(
                        "a map does not preserve the family of axis-perpendicular cut lines".into(),
                    )
                })?;
            }
            pull.push(row_pulls);
        }

        // candidate hull points: V0 and V1
        let mut cands: Vec<[i64; 3]> = (0..3)
            .map(|j| {
                let mut e = [0; 3];
                e[j] = den;
                e
            })
            .collect();
        for m in &bary {
            for c in 0..3 {
                cands.push([m[0][c], m[1][c], m[2][c]]);
            }
        }
        cands.sort();
        cands.dedup();
        let hull = convex_hull(&q, &cands, den);
        let lambda_min_num = (0..3)
            .map(|p| hull.iter().map(|h| h[p]).min().unwrap())
            .min()
            .unwrap();
        let geom = ExactGeometry {
            den,
            lambda_min_num,
            lambda_min: (0..3)
                .map(|p| hull.iter().map(|h| h[p]).min().unwrap() as f64 / den as f64)
                .fold(f64::INFINITY, f64::min),
            bary,
            hull,
            pull,
        };
        geom.check_hull_invariance(desc)?;
        Ok(geom)
    }

    /// Distance factor: the cell reaches `kappa` times its boundary-triangle height
    /// along each symmetry axis.
    pub fn kappa(&self) -> f64 {
        1.0 - self.lambda_min
    }

    pub fn hull_points_planar(&self, q: &[[f64; 2]; 3]) -> Vec<[f64; 2]> {
        self.hull
            .iter()
            .map(|h| to_planar(q, [h[0] as f64, h[1] as f64, h[2] as f64], self.den as f64))
            .collect()
    }

    fn check_hull_invariance(&self, desc: &PcfDescriptor) -> Result<()> {
        let q = desc.boundary;
        let poly = self.hull_points_planar(&q);
        for m in &desc.maps {
            for p in &poly {
                if !inside_convex(&poly, m.apply(*p), 1e-12) {
                    return Err(Error::InvalidDescriptor(
                        "convex hull of V1 is not mapped into itself".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn pullback_of_row(row: [i64; 3], den: i64) -> Option<Pullback> {
    let (a, b, c) = (row[0], row[1], row[2]);
    let (target, same, odd) = if a == b && b != c {
        (2, a, c)
    } else if a == c && b != c {
        (1, a, b)
    } else if b == c && a != b {
        (0, b, a)
    } else {
        return None;
    };
    Some(Pullback {
        target,
        alpha: (odd - same) as f64 / den as f64,
        beta: same as f64 / den as f64,
        alpha_num: odd - same,
        beta_num: same,
    })
}

pub fn barycentric(q: &[[f64; 2]; 3], p: [f64; 2]) -> [f64; 3] {
    let (x0, y0) = (q[0][0], q[0][1]);
    let (x1, y1) = (q[1][0], q[1][1]);
    let (x2, y2) = (q[2][0], q[2][1]);
    let det = (y1 - y2) * (x0 - x2) + (x2 - x1) * (y0 - y2);
    let l0 = ((y1 - y2) * (p[0] - x2) + (x2 - x1) * (p[1] - y2)) / det;
    let l1 = ((y2 - y0) * (p[0] - x2) + (x0 - x2) * (p[1] - y2)) / det;
    [l0, l1, 1.0 - l0 - l1]
}

pub fn to_planar(q: &[[f64; 2]; 3], lam: [f64; 3], den: f64) -> [f64; 2] {
    let mut out = [0.0; 2];
    for j in 0..3 {
        out[0] += lam[j] * q[j][0] / den;
        out[1] += lam[j] * q[j][1] / den;
    }
    out
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Monotone-chain hull; returns the extreme candidates in counterclockwise order.
fn convex_hull(q: &[[f64; 2]; 3], cands: &[[i64; 3]], den: i64) -> Vec<[i64; 3]> {
    let mut pts: Vec<([f64; 2], [i64; 3])> = cands
        .iter()
        .map(|c| {
            (
                to_planar(q, [c[0] as f64, c[1] as f64, c[2] as f64], den as f64),
                *c,
            )
        })
        .collect();
    pts.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]).then(a.0[1].total_cmp(&b.0[1])));
    let mut lower: Vec<([f64; 2], [i64; 3])> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2].0, lower[lower.len() - 1].0, p.0) <= 1e-12 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<([f64; 2], [i64; 3])> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2].0, upper[upper.len() - 1].0, p.0) <= 1e-12 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower.into_iter().map(|(_, c)| c).collect()
}

/// Point-in-convex-polygon test for a counterclockwise polygon.
pub fn inside_convex(poly: &[[f64; 2]], p: [f64; 2], tol: f64) -> bool {
    (0..poly.len()).all(|i| cross(poly[i], poly[(i + 1) % poly.len()], p) >= -tol)
}

/// Height of the smallest equilateral triangle containing the points.
///
/// For outward normals at angles `t, t+120°, t+240°` the enclosing triangle has
/// height equal to the sum of the three support values; `t` is scanned on a
/// grid that contains every multiple of 1/30 degree.
pub fn min_enclosing_height(pts: &[[f64; 2]]) -> f64 {
    let steps = 3600;
    (0..steps)
        .map(|s| {
            let t = std::f64::consts::FRAC_PI_6 + s as f64 * (2.0 * std::f64::consts::PI / 3.0) / steps as f64;
            (0..3)
                .map(|k| {
                    let a = t + k as f64 * 2.0 * std::f64::consts::PI / 3.0;
                    let (sn, cs) = a.sin_cos();
                    pts.iter().map(|p| cs * p[0] + sn * p[1]).fold(f64::NEG_INFINITY, f64::max)
                })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// The planar isometry realizing a permutation of the boundary labels.
pub fn symmetry_map(q: &[[f64; 2]; 3], perm: [usize; 3]) -> AffineMap {
    AffineMap::from_triangles(*q, [q[perm[0]], q[perm[1]], q[perm[2]]])
}
