//! Descriptor file format and the three built-in fractals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planar affine map `(x, y) -> (a x + b y + e, c x + d y + f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl AffineMap {
    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.a * p[0] + self.b * p[1] + self.e,
            self.c * p[0] + self.d * p[1] + self.f,
        ]
    }

    /// Operator norm of the linear part.
    pub fn operator_norm(&self) -> f64 {
        // largest singular value of [[a, b], [c, d]]
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        let s = a * a + b * b + c * c + d * d;
        let det = a * d - b * c;
        let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
        ((s + disc) / 2.0).sqrt()
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Homothety with ratio `s` and fixed point `z`.
    pub fn homothety(s: f64, z: [f64; 2]) -> Self {
        AffineMap {
            a: s,
            b: 0.0,
            c: 0.0,
            d: s,
            e: (1.0 - s) * z[0],
            f: (1.0 - s) * z[1],
        }
    }

    /// The affine map sending three points onto three points.
    pub fn from_triangles(src: [[f64; 2]; 3], dst: [[f64; 2]; 3]) -> Self {
        let (u1, u2) = (sub(src[1], src[0]), sub(src[2], src[0]));
        let (v1, v2) = (sub(dst[1], dst[0]), sub(dst[2], dst[0]));
        let det = u1[0] * u2[1] - u2[0] * u1[1];
        // inverse of [u1 u2]
        let inv = [[u2[1] / det, -u2[0] / det], [-u1[1] / det, u1[0] / det]];
        let a = v1[0] * inv[0][0] + v2[0] * inv[1][0];
        let b = v1[0] * inv[0][1] + v2[0] * inv[1][1];
        let c = v1[1] * inv[0][0] + v2[1] * inv[1][0];
        let d = v1[1] * inv[0][1] + v2[1] * inv[1][1];
        let e = dst[0][0] - a * src[0][0] - b * src[0][1];
        let f = dst[0][1] - c * src[0][0] - d * src[0][1];
        AffineMap { a, b, c, d, e, f }
    }
}

fn sub(p: [f64; 2], q: [f64; 2]) -> [f64; 2] {
    [p[0] - q[0], p[1] - q[1]]
}

/// User-facing description of a p.c.f. fractal with three boundary vertices.
///
/// `identifications` lists `[i, j, k, l]` meaning `F_i(q_j) = F_k(q_l)`;
/// `symmetry` lists the six D3 elements as permutations of the boundary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcfDescriptor {
    pub name: String,
    pub maps: Vec<AffineMap>,
    pub boundary: [[f64; 2]; 3],
    pub identifications: Vec<[usize; 4]>,
    pub symmetry: Vec<[usize; 3]>,
}

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

/// `q0 = (1/2, sqrt3/2)`, `q1 = (0, 0)`, `q2 = (1, 0)`.
pub fn unit_boundary() -> [[f64; 2]; 3] {
    [[0.5, SQRT3 / 2.0], [0.0, 0.0], [1.0, 0.0]]
}

pub fn all_permutations() -> Vec<[usize; 3]> {
    vec![[0, 1, 2], [1, 2, 0], [2, 0, 1], [0, 2, 1], [2, 1, 0], [1, 0, 2]]
}

impl PcfDescriptor {
    pub fn n_maps(&self) -> usize {
        self.maps.len()
    }

    /// Self-similar measure weight of every first-level cell.
    pub fn measure_weight(&self) -> f64 {
        1.0 / self.maps.len() as f64
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Built-in descriptors: `sg`, `hexagasket`, `sg3`.
    pub fn builtin(name: &str) -> Result<Self> {
        let q = unit_boundary();
        let maps = match name {
            "sg" => (0..3).map(|i| AffineMap::homothety(0.5, q[i])).collect(),
            "sg3" => {
                // cells 0,1,2 sit at the corners; 3 is bottom-middle, 4 and 5 the middle row
                let lower_left = [
                    [1.0 / 3.0, 0.0],
                    [1.0 / 6.0, SQRT3 / 6.0],
                    [1.0 / 2.0, SQRT3 / 6.0],
                ];
                let mut maps: Vec<AffineMap> =
                    (0..3).map(|i| AffineMap::homothety(1.0 / 3.0, q[i])).collect();
                for lower_left in lower_left {
                    maps.push(AffineMap {
                        a: 1.0 / 3.0,
                        b: 0.0,
                        c: 0.0,
                        d: 1.0 / 3.0,
                        e: lower_left[0],
                        f: lower_left[1],
                    });
                }
                maps
            }
            "hexagasket" => {
                let centroid = [0.5, SQRT3 / 6.0];
                let mut maps: Vec<AffineMap> =
                    (0..3).map(|i| AffineMap::homothety(1.0 / 3.0, q[i])).collect();
                for qi in q.iter() {
                    // point reflection composed with contraction; F(q_i) is the outer star tip
                    let tip = [2.0 * centroid[0] - qi[0], 2.0 * centroid[1] - qi[1]];
                    maps.push(AffineMap {
                        a: -1.0 / 3.0,
                        b: 0.0,
                        c: 0.0,
                        d: -1.0 / 3.0,
                        e: tip[0] + qi[0] / 3.0,
                        f: tip[1] + qi[1] / 3.0,
                    });
                }
                maps
            }
            other => return Err(Error::UnknownFractal(other.to_string())),
        };
        let identifications = identifications_from_geometry(&maps, &q);
        Ok(PcfDescriptor {
            name: name.to_string(),
            maps,
            boundary: q,
            identifications,
            symmetry: all_permutations(),
        })
    }
}

/// All pairs `F_i(q_j) = F_k(q_l)` with `(i, j) < (k, l)`, found from coordinates.
pub fn identifications_from_geometry(maps: &[AffineMap], q: &[[f64; 2]; 3]) -> Vec<[usize; 4]> {
    let pts: Vec<(usize, usize, [f64; 2])> = (0..maps.len())
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, maps[i].apply(q[j])))
        .collect();
    let mut out = Vec::new();
    for (a, &(i, j, p)) in pts.iter().enumerate() {
        for &(k, l, r) in &pts[a + 1..] {
            if i != k && close(p, r) {
                out.push([i, j, k, l]);
            }
        }
    }
    out
}

pub(crate) fn close(p: [f64; 2], r: [f64; 2]) -> bool {
    (p[0] - r[0]).abs() < 1e-9 && (p[1] - r[1]).abs() < 1e-9
}
