//! Fractals, addresses, cells and their neighbors.
//!
//! A [`Fractal`] is a validated [`PcfDescriptor`] together with everything
//! derived from it once: the level-1 vertex classes used to canonicalize
//! addresses, the exact barycentric geometry, the harmonic structure and the
//! registry of neighborhood types.

mod address;
mod descriptor;
pub mod geometry;
pub mod mesh;

pub use address::{parse_word, word_to_string, Address, CellRef};
pub use descriptor::{all_permutations, unit_boundary, AffineMap, PcfDescriptor, SQRT3};
pub use geometry::{ExactGeometry, Pullback};
pub use mesh::{Mesh, VertexFunction};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::harmonic::HarmonicStructure;
use descriptor::close;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointClass {
    Boundary,
    Junction,
    GenericVertex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Boundary(u8),
    Interior(usize),
}

/// A neighborhood type: the shape of `(C_w, D_w)` up to the D3 action.
#[derive(Debug, Clone)]
pub struct NeighborhoodType {
    pub id: usize,
    /// First cell (in level, then word order) found with this type.
    pub representative: CellRef,
    /// Number of neighbor cells at each boundary vertex of the representative.
    pub l: [usize; 3],
    signature: Vec<Vec<[i64; 3]>>,
}

#[derive(Debug, Clone)]
pub struct Fractal {
    desc: PcfDescriptor,
    slots: Vec<[Slot; 3]>,
    /// Members of each interior V1 class, sorted; the first is the representative.
    interior: Vec<Vec<(u8, u8)>>,
    /// `corner[l] = (i, j)` with `F_i(q_j) = q_l`.
    corner: [(u8, u8); 3],
    ratio: f64,
    size0: f64,
    geometry: ExactGeometry,
    harmonic: HarmonicStructure,
    types: Vec<NeighborhoodType>,
}

impl Fractal {
    pub fn builtin(name: &str) -> Result<Self> {
        Self::new(PcfDescriptor::builtin(name)?)
    }

    /// Validates the descriptor and derives the cached structures.
    pub fn new(desc: PcfDescriptor) -> Result<Self> {
        let n = desc.maps.len();
        if !(2..=10).contains(&n) {
            return Err(Error::InvalidDescriptor(format!("{n} maps; expected 2 to 10")));
        }
        if desc.symmetry.len() != 6 {
            return Err(Error::InvalidDescriptor("symmetry must list six permutations".into()));
        }
        for (i, m) in desc.maps.iter().enumerate() {
            if m.operator_norm() >= 1.0 {
                return Err(Error::InvalidDescriptor(format!("map {i} is not a contraction")));
            }
        }
        let q = desc.boundary;
        let point = |i: usize, j: usize| desc.maps[i].apply(q[j]);

        // union-find over (i, j) pairs using the declared identifications
        let mut parent: Vec<usize> = (0..3 * n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let next = p[y];
                p[y] = r;
                y = next;
            }
            r
        }
        for &[i, j, k, l] in &desc.identifications {
            if i >= n || k >= n || j > 2 || l > 2 {
                return Err(Error::InvalidDescriptor(format!(
                    "identification [{i},{j},{k},{l}] out of range"
                )));
            }
            if !close(point(i, j), point(k, l)) {
                return Err(Error::InvalidDescriptor(format!(
                    "identification [{i},{j},{k},{l}] joins distinct points"
                )));
            }
            let (a, b) = (find(&mut parent, 3 * i + j), find(&mut parent, 3 * k + l));
            parent[a] = b;
        }
        for a in 0..3 * n {
            for b in a + 1..3 * n {
                if close(point(a / 3, a % 3), point(b / 3, b % 3))
                    && find(&mut parent, a) != find(&mut parent, b)
                {
                    return Err(Error::InvalidDescriptor(format!(
                        "F_{}(q_{}) and F_{}(q_{}) coincide but are not identified",
                        a / 3,
                        a % 3,
                        b / 3,
                        b % 3
                    )));
                }
            }
        }

        // connectivity of the level-1 cell graph
        let mut cell_root: Vec<usize> = (0..n).collect();
        for a in 0..3 * n {
            for b in 0..3 * n {
                if a / 3 != b / 3 && find(&mut parent, a) == find(&mut parent, b) {
                    let (x, y) = (find(&mut cell_root, a / 3), find(&mut cell_root, b / 3));
                    cell_root[x] = y;
                }
            }
        }
        let r0 = find(&mut cell_root, 0);
        if (0..n).any(|i| find(&mut cell_root, i) != r0) {
            return Err(Error::InvalidDescriptor("level-1 graph is disconnected".into()));
        }

        // boundary classes and the corner table
        let mut corner = [(u8::MAX, 0u8); 3];
        let mut groups: BTreeMap<usize, Vec<(u8, u8)>> = BTreeMap::new();
        for a in 0..3 * n {
            groups
                .entry(find(&mut parent, a))
                .or_default()
                .push(((a / 3) as u8, (a % 3) as u8));
        }
        let mut slots = vec![[Slot::Interior(0); 3]; n];
        let mut interior = Vec::new();
        let mut classes: Vec<Vec<(u8, u8)>> = groups.into_values().collect();
        classes.sort();
        for members in classes {
            let (i0, j0) = members[0];
            let at = point(i0 as usize, j0 as usize);
            if let Some(l) = (0..3).find(|&l| close(at, q[l])) {
                if members.len() != 1 {
                    return Err(Error::InvalidDescriptor(format!(
                        "boundary vertex q_{l} lies in more than one level-1 cell"
                    )));
                }
                corner[l] = (i0, j0);
                slots[i0 as usize][j0 as usize] = Slot::Boundary(l as u8);
            } else {
                for &(i, j) in &members {
                    slots[i as usize][j as usize] = Slot::Interior(interior.len());
                }
                interior.push(members);
            }
        }
        if corner.iter().any(|c| c.0 == u8::MAX) {
            return Err(Error::InvalidDescriptor(
                "every boundary vertex must be the image of a boundary vertex".into(),
            ));
        }

        let geometry = ExactGeometry::new(&desc)?;
        let ratio = desc.maps[0].det().abs().sqrt();
        let size0 = geometry::min_enclosing_height(&geometry.hull_points_planar(&desc.boundary));
        let mut fractal = Fractal {
            harmonic: HarmonicStructure::placeholder(n),
            desc,
            slots,
            interior,
            corner,
            ratio,
            size0,
            geometry,
            types: Vec::new(),
        };
        fractal.check_symmetry()?;
        fractal.harmonic = HarmonicStructure::new(&fractal)?;
        fractal.types = fractal.enumerate_types()?;
        Ok(fractal)
    }

    fn check_symmetry(&self) -> Result<()> {
        let q = self.desc.boundary;
        for perm in &self.desc.symmetry {
            let mut seen = *perm;
            seen.sort();
            if seen != [0, 1, 2] {
                return Err(Error::InvalidDescriptor(format!("{perm:?} is not a permutation")));
            }
            let s = geometry::symmetry_map(&q, *perm);
            for i in 0..self.n_maps() {
                let image: Vec<[f64; 2]> =
                    (0..3).map(|j| s.apply(self.desc.maps[i].apply(q[j]))).collect();
                let hit = (0..self.n_maps()).any(|k| {
                    image
                        .iter()
                        .all(|p| (0..3).any(|l| close(*p, self.desc.maps[k].apply(q[l]))))
                });
                if !hit {
                    return Err(Error::InvalidDescriptor(format!(
                        "symmetry {perm:?} does not permute the level-1 cells"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn descriptor(&self) -> &PcfDescriptor {
        &self.desc
    }

    pub fn name(&self) -> &str {
        &self.desc.name
    }

    pub fn n_maps(&self) -> usize {
        self.desc.maps.len()
    }

    pub fn is_sg(&self) -> bool {
        self.n_maps() == 3 && self.interior.len() == 3 && self.interior.iter().all(|c| c.len() == 2)
    }

    pub fn require_sg(&self, what: &str) -> Result<()> {
        if self.is_sg() {
            Ok(())
        } else {
            Err(Error::Unsupported(format!("{what} on `{}`", self.name())))
        }
    }

    /// Deepest level for which vertex meshes are built.
    pub fn depth_cap(&self) -> usize {
        if self.n_maps() <= 3 {
            10
        } else {
            7
        }
    }

    pub fn geometry(&self) -> &ExactGeometry {
        &self.geometry
    }

    pub fn harmonic(&self) -> &HarmonicStructure {
        &self.harmonic
    }

    /// Contraction ratio shared by all maps.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// Number of points of `V1 \ V0`.
    pub fn interior_v1_count(&self) -> usize {
        self.interior.len()
    }

    /// Level-1 pairs `(i, j)` naming the same interior point of `V1`.
    pub fn v1_classes(&self) -> &[Vec<(u8, u8)>] {
        &self.interior
    }

    /// `(i, j)` with `F_i(q_j) = q_l`.
    pub fn corner(&self, l: usize) -> (usize, usize) {
        let (i, j) = self.corner[l];
        (i as usize, j as usize)
    }

    /// `None` for a boundary slot, else the interior class of `F_i(q_j)`.
    pub fn v1_class_of(&self, i: usize, j: usize) -> Option<usize> {
        match self.slots[i][j] {
            Slot::Boundary(_) => None,
            Slot::Interior(c) => Some(c),
        }
    }

    /// `Some(l)` when `F_i(q_j) = q_l`.
    pub fn boundary_label(&self, i: usize, j: usize) -> Option<usize> {
        match self.slots[i][j] {
            Slot::Boundary(l) => Some(l as usize),
            Slot::Interior(_) => None,
        }
    }

    /// Canonical address of `F_word(q_vertex)`.
    pub fn address(&self, word: &[u8], vertex: usize) -> Result<Address> {
        if vertex > 2 {
            return Err(Error::InvalidAddress(format!("vertex {vertex} not in 0..=2")));
        }
        if let Some(d) = word.iter().find(|&&d| d as usize >= self.n_maps()) {
            return Err(Error::InvalidAddress(format!(
                "letter {d} out of range for {} maps",
                self.n_maps()
            )));
        }
        Ok(self.canonical(word.to_vec(), vertex as u8))
    }

    pub(crate) fn canonical(&self, mut word: Vec<u8>, mut vertex: u8) -> Address {
        while let Some(&last) = word.last() {
            match self.slots[last as usize][vertex as usize] {
                Slot::Boundary(l) => {
                    word.pop();
                    vertex = l;
                }
                Slot::Interior(c) => {
                    let (i, j) = self.interior[c][0];
                    *word.last_mut().unwrap() = i;
                    vertex = j;
                    break;
                }
            }
        }
        Address::raw(word, vertex)
    }

    /// Canonical addresses of the three boundary points of a cell.
    pub fn boundary_points(&self, cell: &CellRef) -> [Address; 3] {
        [0u8, 1, 2].map(|v| self.canonical(cell.word.clone(), v))
    }

    pub fn point_coords(&self, addr: &Address) -> [f64; 2] {
        self.raw_coords(&addr.word, addr.vertex as usize)
    }

    /// `F_word(q_vertex)` by composing the maps.
    pub fn raw_coords(&self, word: &[u8], vertex: usize) -> [f64; 2] {
        word.iter()
            .rev()
            .fold(self.desc.boundary[vertex], |p, &i| self.desc.maps[i as usize].apply(p))
    }

    pub fn classify_point(&self, addr: &Address) -> PointClass {
        match addr.word.last() {
            None => PointClass::Boundary,
            Some(&last) => match self.slots[last as usize][addr.vertex as usize] {
                Slot::Interior(c) if self.interior[c].len() >= 2 => PointClass::Junction,
                _ => PointClass::GenericVertex,
            },
        }
    }

    /// All level-`level` cells containing the point, each with the vertex
    /// index the point has in that cell. Sorted by word.
    pub fn cells_containing(&self, addr: &Address, level: usize) -> Result<Vec<(CellRef, usize)>> {
        if level < addr.level() {
            return Err(Error::InvalidArgument(format!(
                "level {level} is coarser than the point's level {}",
                addr.level()
            )));
        }
        let mut start: Vec<(Vec<u8>, u8)> = match addr.word.split_last() {
            None => vec![(Vec::new(), addr.vertex)],
            Some((&last, prefix)) => match self.slots[last as usize][addr.vertex as usize] {
                Slot::Interior(c) => self.interior[c]
                    .iter()
                    .map(|&(i, j)| {
                        let mut w = prefix.to_vec();
                        w.push(i);
                        (w, j)
                    })
                    .collect(),
                Slot::Boundary(_) => vec![(addr.word.clone(), addr.vertex)],
            },
        };
        for (word, vertex) in start.iter_mut() {
            while word.len() < level {
                let (i, j) = self.corner[*vertex as usize];
                word.push(i);
                *vertex = j;
            }
        }
        start.sort();
        Ok(start
            .into_iter()
            .map(|(w, v)| (CellRef::new(w), v as usize))
            .collect())
    }

    /// True when the cell contains a point of `V0`.
    pub fn touches_boundary(&self, cell: &CellRef) -> bool {
        (0..3).any(|l| {
            let mut v = l as u8;
            cell.word.iter().all(|&d| {
                let (i, j) = self.corner[v as usize];
                v = j;
                d == i
            })
        })
    }

    /// Same-level cells meeting the cell at each of its boundary vertices,
    /// each paired with the index of the shared point in the neighbor.
    pub fn neighbor_cells(&self, cell: &CellRef) -> Result<[Vec<(CellRef, usize)>; 3]> {
        if self.touches_boundary(cell) {
            return Err(Error::TouchesBoundary(cell.to_string()));
        }
        let mut out: [Vec<(CellRef, usize)>; 3] = Default::default();
        for (p, slot) in out.iter_mut().enumerate() {
            let addr = self.canonical(cell.word.clone(), p as u8);
            *slot = self
                .cells_containing(&addr, cell.level())?
                .into_iter()
                .filter(|(c, _)| c != cell)
                .collect();
        }
        Ok(out)
    }

    pub fn cell_measure(&self, cell: &CellRef) -> f64 {
        (self.n_maps() as f64).powi(-(cell.level() as i32))
    }

    /// Height of the smallest equilateral triangle enclosing the cell's convex hull.
    pub fn cell_size(&self, cell: &CellRef) -> f64 {
        self.size0 * self.ratio.powi(cell.level() as i32)
    }

    /// Distance along a symmetry axis from a boundary vertex of the cell to the
    /// far side of its convex hull. A cut at `c` times this distance keeps the
    /// fraction `c` of the axis, so `c = 1` is the whole cell.
    pub fn axis_extent(&self, cell: &CellRef) -> f64 {
        self.geometry.kappa() * SQRT3 / 2.0 * self.ratio.powi(cell.level() as i32)
    }

    /// Planar images of the three boundary labels under each symmetry element.
    pub fn symmetry_maps(&self) -> Vec<([usize; 3], AffineMap)> {
        self.desc
            .symmetry
            .iter()
            .map(|&p| (p, geometry::symmetry_map(&self.desc.boundary, p)))
            .collect()
    }

    /// Level-`k` cells in word order.
    pub fn cells_at_level(&self, k: usize) -> impl Iterator<Item = CellRef> + '_ {
        let n = self.n_maps();
        (0..n.pow(k as u32)).map(move |mut idx| {
            let mut word = vec![0u8; k];
            for slot in word.iter_mut().rev() {
                *slot = (idx % n) as u8;
                idx /= n;
            }
            CellRef::new(word)
        })
    }

    pub fn neighborhood_types(&self) -> &[NeighborhoodType] {
        &self.types
    }

    pub fn neighborhood_type(&self, cell: &CellRef) -> Result<&NeighborhoodType> {
        let sig = self.signature(cell)?;
        self.types
            .iter()
            .find(|t| t.signature == sig)
            .ok_or_else(|| Error::InvalidDescriptor(format!("cell {cell} has an unregistered type")))
    }

    fn enumerate_types(&self) -> Result<Vec<NeighborhoodType>> {
        let max_level = if self.n_maps() <= 3 { 5 } else { 4 };
        let mut types: Vec<NeighborhoodType> = Vec::new();
        for k in 2..=max_level {
            for cell in self.cells_at_level(k) {
                if self.touches_boundary(&cell) {
                    continue;
                }
                let sig = self.signature(&cell)?;
                if !types.iter().any(|t| t.signature == sig) {
                    let nb = self.neighbor_cells(&cell)?;
                    types.push(NeighborhoodType {
                        id: types.len(),
                        representative: cell,
                        l: [nb[0].len(), nb[1].len(), nb[2].len()],
                        signature: sig,
                    });
                }
            }
        }
        Ok(types)
    }

    /// Hull points of the neighbor cells in the barycentric frame of the cell,
    /// scaled to integers, minimized over relabelings of the cell's vertices.
    fn signature(&self, cell: &CellRef) -> Result<Vec<Vec<[i64; 3]>>> {
        let nb = self.neighbor_cells(cell)?;
        let frame = [0, 1, 2].map(|v| self.raw_coords(&cell.word, v));
        let scale = (6 * self.geometry.den) as f64;
        let den = self.geometry.den as f64;
        let q = self.desc.boundary;
        let raw: Vec<Vec<[f64; 3]>> = nb
            .iter()
            .flatten()
            .map(|(c, _)| {
                self.geometry
                    .hull
                    .iter()
                    .map(|h| {
                        let local = geometry::to_planar(&q, [h[0] as f64, h[1] as f64, h[2] as f64], den);
                        let p = c.word.iter().rev().fold(local, |p, &i| self.desc.maps[i as usize].apply(p));
                        geometry::barycentric(&frame, p)
                    })
                    .collect()
            })
            .collect();
        let mut best: Option<Vec<Vec<[i64; 3]>>> = None;
        for perm in all_permutations() {
            let mut sig: Vec<Vec<[i64; 3]>> = raw
                .iter()
                .map(|pts| {
                    let mut v: Vec<[i64; 3]> = pts
                        .iter()
                        .map(|l| perm.map(|k| (l[k] * scale).round() as i64))
                        .collect();
                    v.sort();
                    v
                })
                .collect();
            sig.sort();
            if best.as_ref().is_none_or(|b| sig < *b) {
                best = Some(sig);
            }
        }
        Ok(best.unwrap_or_default())
    }
}
