//! Vertex sets `V_0 ⊂ V_1 ⊂ … ⊂ V_m` with stable integer ids.
//!
//! Ids are assigned level by level: `V_k` occupies ids `0..count_at(k)`, so a
//! function on `V_m` restricts to `V_k` by truncation. Cells of level `k` are
//! stored in word order (the word read as a base-`N` integer).

use std::collections::HashMap;
use std::sync::Arc;

use super::{Address, CellRef, Fractal};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Mesh {
    n: usize,
    addrs: Vec<Address>,
    index: HashMap<Address, usize>,
    counts: Vec<usize>,
    cells: Vec<Vec<[u32; 3]>>,
}

impl Mesh {
    pub fn build(fractal: &Fractal, level: usize) -> Result<Mesh> {
        if level > fractal.depth_cap() {
            return Err(Error::DepthCap { depth: level, cap: fractal.depth_cap() });
        }
        let n = fractal.n_maps();
        let n_classes = fractal.interior_v1_count();
        let mut addrs: Vec<Address> = (0..3u8).map(|v| Address::raw(Vec::new(), v)).collect();
        let mut counts = vec![3];
        let mut cells: Vec<Vec<[u32; 3]>> = vec![vec![[0, 1, 2]]];
        let mut word = Vec::new();
        for k in 1..=level {
            let parents = &cells[k - 1];
            let mut next = Vec::with_capacity(parents.len() * n);
            for (pidx, parent) in parents.iter().enumerate() {
                decode(pidx, k - 1, n, &mut word);
                let first_new = addrs.len() as u32;
                for &(i, j) in fractal.v1_classes().iter().map(|c| &c[0]) {
                    word.push(i);
                    addrs.push(fractal.canonical(word.clone(), j));
                    word.pop();
                }
                for i in 0..n {
                    let mut ids = [0u32; 3];
                    for (j, id) in ids.iter_mut().enumerate() {
                        *id = match fractal.v1_class_of(i, j) {
                            None => parent[fractal.boundary_label(i, j).unwrap()],
                            Some(c) => first_new + c as u32,
                        };
                    }
                    next.push(ids);
                }
            }
            debug_assert_eq!(addrs.len(), counts[k - 1] + parents.len() * n_classes);
            counts.push(addrs.len());
            cells.push(next);
        }
        let index = addrs.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        Ok(Mesh { n, addrs, index, counts, cells })
    }

    pub fn level(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn n_maps(&self) -> usize {
        self.n
    }

    /// `|V_k|`.
    pub fn count_at(&self, k: usize) -> usize {
        self.counts[k]
    }

    pub fn len(&self) -> usize {
        self.addrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addrs.is_empty()
    }

    pub fn address(&self, id: usize) -> &Address {
        &self.addrs[id]
    }

    pub fn addresses(&self) -> &[Address] {
        &self.addrs
    }

    pub fn id_of(&self, addr: &Address) -> Option<usize> {
        self.index.get(addr).copied()
    }

    /// Vertex ids of the level-`k` cells in word order.
    pub fn cells(&self, k: usize) -> &[[u32; 3]] {
        &self.cells[k]
    }

    pub fn cell_index(&self, word: &[u8]) -> usize {
        word.iter().fold(0, |acc, &d| acc * self.n + d as usize)
    }

    pub fn cell_vertices(&self, cell: &CellRef) -> [usize; 3] {
        self.cells[cell.level()][self.cell_index(&cell.word)].map(|v| v as usize)
    }

    /// Neighbor lists of the graph `Γ_k`, each sorted by id.
    pub fn adjacency(&self, k: usize) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.counts[k]];
        for c in &self.cells[k] {
            for a in 0..3 {
                for b in 0..3 {
                    if a != b {
                        adj[c[a] as usize].push(c[b] as usize);
                    }
                }
            }
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
        }
        adj
    }
}

fn decode(mut idx: usize, k: usize, n: usize, word: &mut Vec<u8>) {
    word.clear();
    word.resize(k, 0);
    for slot in word.iter_mut().rev() {
        *slot = (idx % n) as u8;
        idx /= n;
    }
}

/// Values on `V_level` of a shared mesh, indexed by vertex id.
#[derive(Debug, Clone)]
pub struct VertexFunction {
    mesh: Arc<Mesh>,
    level: usize,
    values: Vec<f64>,
}

impl VertexFunction {
    pub fn new(mesh: Arc<Mesh>, level: usize, values: Vec<f64>) -> Result<Self> {
        if level > mesh.level() {
            return Err(Error::DepthCap { depth: level, cap: mesh.level() });
        }
        if values.len() != mesh.count_at(level) {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} vertices",
                values.len(),
                mesh.count_at(level)
            )));
        }
        Ok(VertexFunction { mesh, level, values })
    }

    pub fn from_fn(mesh: Arc<Mesh>, level: usize, f: impl Fn(&Address) -> f64) -> Result<Self> {
        if level > mesh.level() {
            return Err(Error::DepthCap { depth: level, cap: mesh.level() });
        }
        let values = mesh.addresses()[..mesh.count_at(level)].iter().map(f).collect();
        Ok(VertexFunction { mesh, level, values })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, id: usize) -> f64 {
        self.values[id]
    }

    pub fn get(&self, addr: &Address) -> Option<f64> {
        self.mesh
            .id_of(addr)
            .filter(|&id| id < self.values.len())
            .map(|id| self.values[id])
    }

    /// The same function on the coarser set `V_k`.
    pub fn restrict(&self, k: usize) -> Result<Self> {
        if k > self.level {
            return Err(Error::InvalidArgument(format!(
                "cannot restrict level {} to finer level {k}",
                self.level
            )));
        }
        Ok(VertexFunction {
            mesh: self.mesh.clone(),
            level: k,
            values: self.values[..self.mesh.count_at(k)].to_vec(),
        })
    }

    /// Values at the three boundary points of a cell of level at most `level`.
    pub fn cell_values(&self, cell: &CellRef) -> [f64; 3] {
        self.mesh.cell_vertices(cell).map(|id| self.values[id])
    }
}
