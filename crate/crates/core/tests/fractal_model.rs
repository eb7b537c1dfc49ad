use gasketlab::fractal::{CellRef, Mesh, SQRT3};
use gasketlab::{Fractal, PcfDescriptor, PointClass};

const NAMES: [&str; 3] = ["sg", "hexagasket", "sg3"];

fn close(a: [f64; 2], b: [f64; 2], tol: f64) -> bool {
    (a[0] - b[0]).abs() < tol && (a[1] - b[1]).abs() < tol
}

#[test]
fn builtin_descriptors_have_expected_sizes() {
    let sg = PcfDescriptor::builtin("sg").unwrap();
    assert_eq!(sg.n_maps(), 3);
    assert_eq!(sg.measure_weight(), 1.0 / 3.0);
    let hex = PcfDescriptor::builtin("hexagasket").unwrap();
    assert_eq!(hex.n_maps(), 6);
    assert_eq!(hex.measure_weight(), 1.0 / 6.0);
    let sg3 = Fractal::builtin("sg3").unwrap();
    assert_eq!(sg3.interior_v1_count(), 7);
    assert!(PcfDescriptor::builtin("carpet").is_err());
}

#[test]
fn maps_are_contractions_with_unit_measure() {
    for name in NAMES {
        let f = Fractal::builtin(name).unwrap();
        for m in &f.descriptor().maps {
            assert!(m.operator_norm() < 1.0);
        }
        for k in 0..=4 {
            let total: f64 = f.cells_at_level(k).map(|c| f.cell_measure(&c)).sum();
            assert!((total - 1.0).abs() < 1e-12, "{name} level {k}");
        }
    }
}

#[test]
fn point_coordinates() {
    let sg = Fractal::builtin("sg").unwrap();
    let q0 = sg.address(&[], 0).unwrap();
    assert!(close(sg.point_coords(&q0), [0.5, SQRT3 / 2.0], 1e-15));
    let a = sg.address(&[0], 1).unwrap();
    let b = sg.address(&[1], 0).unwrap();
    assert_eq!(a, b);
    assert!(close(sg.point_coords(&a), sg.raw_coords(&[1], 0), 1e-12));
    // F_1 q_2 = (1/2, 0), then halfway to q_0
    let p = sg.address(&[0, 1], 2).unwrap();
    assert!(close(sg.point_coords(&p), [0.5, SQRT3 / 4.0], 1e-15));
}

#[test]
fn identifications_agree_in_coordinates() {
    for name in NAMES {
        let f = Fractal::builtin(name).unwrap();
        for &[i, j, k, l] in &f.descriptor().identifications {
            let a = f.raw_coords(&[i as u8], j);
            let b = f.raw_coords(&[k as u8], l);
            assert!(close(a, b, 1e-12));
        }
    }
}

#[test]
fn canonical_form_is_idempotent_and_names_points_uniquely() {
    for name in NAMES {
        let f = Fractal::builtin(name).unwrap();
        let n = f.n_maps();
        for cell in f.cells_at_level(3) {
            for v in 0..3 {
                let a = f.address(&cell.word, v).unwrap();
                let again = f.address(a.word(), a.vertex()).unwrap();
                assert_eq!(a, again);
                assert!(close(f.point_coords(&a), f.raw_coords(&cell.word, v), 1e-12));
            }
        }
        // distinct canonical addresses are distinct points
        let mesh = Mesh::build(&f, if n == 3 { 5 } else { 3 }).unwrap();
        let pts: Vec<[f64; 2]> = mesh.addresses().iter().map(|a| f.point_coords(a)).collect();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                assert!(!close(pts[i], pts[j], 1e-9), "{name}: {} {}", mesh.address(i), mesh.address(j));
            }
        }
    }
}

#[test]
fn point_classes() {
    let sg = Fractal::builtin("sg").unwrap();
    assert_eq!(sg.classify_point(&sg.address(&[], 0).unwrap()), PointClass::Boundary);
    assert_eq!(sg.classify_point(&sg.address(&[0], 1).unwrap()), PointClass::Junction);
    let hex = Fractal::builtin("hexagasket").unwrap();
    // the outer tip of a reflected first-level cell
    let tip = hex.address(&[3], 0).unwrap();
    assert_eq!(hex.classify_point(&tip), PointClass::GenericVertex);
}

#[test]
fn gasket_junction_census() {
    let sg = Fractal::builtin("sg").unwrap();
    let mesh = Mesh::build(&sg, 6).unwrap();
    for m in 0..=6 {
        assert_eq!(mesh.count_at(m), (3usize.pow(m as u32 + 1) + 3) / 2);
        for a in &mesh.addresses()[3..mesh.count_at(m)] {
            assert_eq!(sg.classify_point(a), PointClass::Junction);
        }
    }
}

#[test]
fn neighbor_counts() {
    let sg = Fractal::builtin("sg").unwrap();
    let nb = sg.neighbor_cells(&CellRef::new(vec![0, 1])).unwrap();
    assert!(nb.iter().all(|l| l.len() == 1));
    assert!(sg.neighbor_cells(&CellRef::new(vec![0, 0])).is_err());

    // level-2 sg3 cells: some corner next to the central first-level vertex has two neighbors
    let sg3 = Fractal::builtin("sg3").unwrap();
    let max_l = sg3
        .cells_at_level(2)
        .filter(|c| !sg3.touches_boundary(c))
        .flat_map(|c| sg3.neighbor_cells(&c).unwrap().map(|v| v.len()))
        .max()
        .unwrap();
    assert_eq!(max_l, 2);

    let hex = Fractal::builtin("hexagasket").unwrap();
    let has_zero = hex
        .cells_at_level(2)
        .filter(|c| !hex.touches_boundary(c))
        .any(|c| hex.neighbor_cells(&c).unwrap().iter().any(|v| v.is_empty()));
    assert!(has_zero);
}

#[test]
fn neighborhood_type_counts() {
    assert_eq!(Fractal::builtin("sg").unwrap().neighborhood_types().len(), 1);
    assert_eq!(Fractal::builtin("sg3").unwrap().neighborhood_types().len(), 3);
    assert_eq!(Fractal::builtin("hexagasket").unwrap().neighborhood_types().len(), 2);
}

/// The cell whose boundary points are the images of `cell`'s under the map.
fn image_cell(f: &Fractal, cell: &CellRef, s: &gasketlab::fractal::AffineMap) -> CellRef {
    let pts: Vec<[f64; 2]> = (0..3).map(|v| s.apply(f.raw_coords(&cell.word, v))).collect();
    f.cells_at_level(cell.level())
        .find(|c| {
            (0..3).all(|v| {
                let p = f.raw_coords(&c.word, v);
                pts.iter().any(|q| close(*q, p, 1e-9))
            })
        })
        .expect("symmetry maps cells to cells")
}

#[test]
fn symmetries_permute_cells_and_preserve_types() {
    for name in NAMES {
        let f = Fractal::builtin(name).unwrap();
        let max_k = if f.n_maps() == 3 { 4 } else { 3 };
        for (_, s) in f.symmetry_maps() {
            for k in 0..=max_k {
                let mut images: Vec<CellRef> =
                    f.cells_at_level(k).map(|c| image_cell(&f, &c, &s)).collect();
                images.sort();
                images.dedup();
                assert_eq!(images.len(), f.n_maps().pow(k as u32));
            }
            for cell in f.cells_at_level(3).filter(|c| !f.touches_boundary(c)) {
                let img = image_cell(&f, &cell, &s);
                assert_eq!(
                    f.neighborhood_type(&cell).unwrap().id,
                    f.neighborhood_type(&img).unwrap().id
                );
            }
        }
    }
}

#[test]
fn types_are_invariant_under_prefixing() {
    for name in NAMES {
        let f = Fractal::builtin(name).unwrap();
        let levels = if f.n_maps() == 3 { 2..=3 } else { 2..=2 };
        for k in levels {
            for cell in f.cells_at_level(k).filter(|c| !f.touches_boundary(c)) {
                let t = f.neighborhood_type(&cell).unwrap().id;
                for u in 0..f.n_maps() as u8 {
                    let mut word = vec![u];
                    word.extend(&cell.word);
                    let deeper = CellRef::new(word);
                    assert!(!f.touches_boundary(&deeper));
                    assert_eq!(f.neighborhood_type(&deeper).unwrap().id, t);
                }
            }
        }
    }
}

#[test]
fn cell_sizes() {
    let sg = Fractal::builtin("sg").unwrap();
    assert!((sg.cell_size(&CellRef::root()) - SQRT3 / 2.0).abs() < 1e-12);
    assert!((sg.cell_size(&CellRef::new(vec![1, 2])) - SQRT3 / 8.0).abs() < 1e-12);
    let sg3 = Fractal::builtin("sg3").unwrap();
    assert!((sg3.cell_size(&CellRef::new(vec![4])) - SQRT3 / 6.0).abs() < 1e-12);
}

#[test]
fn descriptor_json_round_trip() {
    let d = PcfDescriptor::builtin("hexagasket").unwrap();
    let back = PcfDescriptor::from_json(&d.to_json().unwrap()).unwrap();
    assert_eq!(d, back);
    let mut bad = d.clone();
    bad.identifications.pop();
    assert!(Fractal::new(bad).is_err());
}
