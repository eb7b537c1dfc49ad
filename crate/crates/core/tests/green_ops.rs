use std::collections::HashMap;
use std::sync::Arc;

use gasketlab::fractal::{Address, CellRef, Mesh, VertexFunction, SQRT3};
use gasketlab::green::{
    green_eval, phi_cell_integral, phi_eval, spline_eval, spline_integral, v_eval, v_partial, GreenPotential,
    SplineRef,
};
use gasketlab::harmonic::{gram_matrix, harmonic_eval};
use gasketlab::integrate::{Interpolant, PiecewiseHarmonic};
use gasketlab::Fractal;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sg() -> Fractal {
    Fractal::builtin("sg").unwrap()
}

fn tilde_v(f: &Fractal, x: &Address, m: usize) -> f64 {
    -15.0 * v_partial(f, x, m)
}

fn seg_dist(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    ((p[0] - a[0] - t * dx).powi(2) + (p[1] - a[1] - t * dy).powi(2)).sqrt()
}

/// Distance to the largest inner upside-down triangle.
fn dist_to_nabla(p: [f64; 2]) -> f64 {
    let a = [0.25, SQRT3 / 4.0];
    let b = [0.75, SQRT3 / 4.0];
    let c = [0.5, 0.0];
    seg_dist(p, a, b).min(seg_dist(p, b, c)).min(seg_dist(p, c, a))
}

#[test]
fn spline_integrals() {
    let f = sg();
    // ψ_z^{(m+1)} for z ∈ V_{m+1} \ V_m
    for m in 0..=6usize {
        let mesh = Arc::new(Mesh::build(&f, m + 3).unwrap());
        for id in [mesh.count_at(m), mesh.count_at(m + 1) - 1] {
            let z = mesh.address(id).clone();
            let s = SplineRef { z: z.clone(), m: m + 1 };
            let exact = spline_integral(&f, &s).unwrap();
            assert_eq!(exact, 2.0 / 3f64.powi(m as i32 + 2));
            let u = VertexFunction::from_fn(mesh.clone(), m + 3, |a| spline_eval(&f, &s, a).unwrap()).unwrap();
            let numeric = Interpolant::new(&u).cell_integral(&CellRef::root());
            assert!((numeric - exact).abs() < 1e-14, "m={m}");
        }
    }
    let corner = SplineRef { z: f.address(&[], 1).unwrap(), m: 2 };
    assert!((spline_integral(&f, &corner).unwrap() - 1.0 / 27.0).abs() < 1e-16);
}

#[test]
fn green_function_basics() {
    let f = sg();
    let mesh = Mesh::build(&f, 5).unwrap();
    let q = f.address(&[], 2).unwrap();
    let y = f.address(&[1, 0], 2).unwrap();
    assert_eq!(green_eval(&f, &q, &y, 6).unwrap(), 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let x = mesh.address(rng.gen_range(0..mesh.len()));
        let y = mesh.address(rng.gen_range(0..mesh.len()));
        let a = green_eval(&f, x, y, 6).unwrap();
        let b = green_eval(&f, y, x, 6).unwrap();
        assert!((a - b).abs() < 1e-15);
        let mut prev = 0.0;
        for m in 0..=6 {
            let g = green_eval(&f, x, y, m).unwrap();
            assert!(g >= prev);
            prev = g;
        }
    }
}

#[test]
fn green_integral_reproduces_v() {
    let f = sg();
    let big = 8;
    let mesh = Arc::new(Mesh::build(&f, big + 1).unwrap());
    for x in &mesh.addresses()[3..mesh.count_at(2)] {
        let g = VertexFunction::from_fn(mesh.clone(), big + 1, |y| green_eval(&f, x, y, big).unwrap()).unwrap();
        let integral = Interpolant::new(&g).cell_integral(&CellRef::root());
        let v = v_eval(&f, x, 12).unwrap();
        assert!((-integral - v.mid()).abs() < 1e-4, "{x}: {} vs {}", -integral, v.mid());
    }
}

#[test]
fn phi_values_at_sample_points() {
    let f = sg();
    let x = f.address(&[0, 1, 1], 0).unwrap();
    let got = [0, 1, 2].map(|m| phi_eval(&f, m, &x).unwrap());
    let want = [0.8, 0.6, 1.0];
    for k in 0..3 {
        assert!((got[k] - want[k]).abs() < 1e-15, "{got:?}");
    }
    let z = f.address(&[2, 0], 1).unwrap();
    assert_eq!(phi_eval(&f, 1, &z).unwrap(), 1.0);
    assert_eq!(phi_eval(&f, 2, &z).unwrap(), 0.0);
    for tau in [[0, 1, 1], [0, 1, 2], [0, 2, 1], [0, 2, 2]] {
        let x = f.address(&tau, 0).unwrap();
        let v = v_eval(&f, &x, 12).unwrap().scale(-15.0);
        assert!(v.contains(24.0 / 25.0) && v.width() <= 1e-6, "{tau:?}: {v}");
    }
    assert!(phi_eval(&Fractal::builtin("sg3").unwrap(), 0, &x).is_err());
}

#[test]
fn tilde_v_on_the_inner_triangle() {
    let f = sg();
    let mesh = Mesh::build(&f, 4).unwrap();
    let mut hits = 0;
    for x in mesh.addresses() {
        if dist_to_nabla(f.point_coords(x)) < 1e-12 {
            let v = v_eval(&f, x, 12).unwrap().scale(-15.0);
            assert!(v.contains(1.0) && v.width() <= 1e-6, "{x}: {v}");
            hits += 1;
        }
    }
    // 3·2^3 points along the three sides
    assert_eq!(hits, 24);
    let q = v_eval(&f, &f.address(&[], 0).unwrap(), 4).unwrap();
    assert!(q.contains(0.0));
}

#[test]
fn partial_sums_on_vertex_classes() {
    let f = sg();
    for big in 0..=6usize {
        let mesh = Mesh::build(&f, big + 1).unwrap();
        let h = 0.5f64.powi(big as i32 + 1);
        let adj = mesh.adjacency(big + 1);
        let on: Vec<bool> = mesh.addresses().iter().map(|x| dist_to_nabla(f.point_coords(x)) < 1e-12).collect();
        let edge = 1.0 - 5f64.powi(-(big as i32));
        for (id, x) in mesh.addresses().iter().enumerate() {
            let v = tilde_v(&f, x, big);
            let near = !on[id] && adj[id].iter().any(|&y| on[y]);
            if on[id] {
                assert!((v - 1.0).abs() < 1e-13, "M={big} {x}");
            } else if near {
                let d = dist_to_nabla(f.point_coords(x));
                assert!(d <= h + 1e-12);
                assert!((v - edge).abs() < 1e-13, "M={big} {x}: {v}");
            } else {
                assert!(v <= edge + 1e-13, "M={big} {x}");
            }
        }
    }
}

#[test]
fn phi_and_tilde_v_lie_in_unit_interval() {
    let f = sg();
    let mesh = Mesh::build(&f, 8).unwrap();
    for x in mesh.addresses() {
        for m in 0..8 {
            let p = phi_eval(&f, m, x).unwrap();
            assert!((0.0..=1.0).contains(&p));
        }
        let v = tilde_v(&f, x, 20);
        assert!((-1e-15..=1.0 + 1e-15).contains(&v));
    }
}

#[test]
fn v_is_dihedral_invariant() {
    let f = sg();
    let mesh = Mesh::build(&f, 4).unwrap();
    let key = |p: [f64; 2]| ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64);
    let by_coords: HashMap<(i64, i64), usize> =
        mesh.addresses().iter().enumerate().map(|(i, a)| (key(f.point_coords(a)), i)).collect();
    let maps = f.symmetry_maps();
    assert_eq!(maps.len(), 6);
    for (_, s) in maps {
        for x in mesh.addresses() {
            let y = mesh.address(by_coords[&key(s.apply(f.point_coords(x)))]);
            assert!((v_partial(&f, x, 40) - v_partial(&f, y, 40)).abs() < 1e-12);
        }
    }
}

#[test]
fn phi_integrals_over_a_first_level_cell() {
    let f = sg();
    let cell = CellRef::new(vec![0]);
    let mut total = 0.0;
    for m in 0..=30 {
        let i = phi_cell_integral(&f, m, &cell).unwrap();
        assert!((i - 2.0 / 9.0).abs() < 1e-15, "m={m}");
        total += 5f64.powi(-(m as i32)) * i;
    }
    assert!((total - 5.0 / 18.0).abs() < 1e-15);
    // direct check from vertex values at a finer level
    let mesh = Arc::new(Mesh::build(&f, 7).unwrap());
    for m in 0..=5 {
        let u = VertexFunction::from_fn(mesh.clone(), 7, |a| phi_eval(&f, m, a).unwrap()).unwrap();
        assert!((Interpolant::new(&u).cell_integral(&cell) - 2.0 / 9.0).abs() < 1e-14);
    }
}

#[test]
fn gram_matrix_of_harmonic_basis() {
    let g = gram_matrix(&sg());
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 7.0 / 45.0 } else { 4.0 / 45.0 };
            assert!((g[i][j] - want).abs() < 1e-14, "{g:?}");
        }
    }
    for name in ["hexagasket", "sg3"] {
        let g = gram_matrix(&Fractal::builtin(name).unwrap());
        for i in 0..3 {
            assert!((g[i].iter().sum::<f64>() - 1.0 / 3.0).abs() < 1e-13, "{name}");
            for j in 0..3 {
                assert!((g[i][j] - g[j][i]).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn green_potential_of_constant_is_v() {
    let f = sg();
    let mesh = Arc::new(Mesh::build(&f, 6).unwrap());
    let u = GreenPotential::new(&f, mesh.clone(), 6, [1.0; 3]).unwrap();
    for (id, x) in mesh.addresses().iter().enumerate() {
        assert!((u.nodal().value(id) - v_partial(&f, x, 60)).abs() < 1e-14, "{x}");
    }
    let whole = u.cell_integral(&CellRef::root());
    assert!((whole + 1.0 / 18.0).abs() < 1e-15);
}

#[test]
fn green_potential_cell_integrals_are_additive() {
    let f = sg();
    let level = 6;
    let mesh = Arc::new(Mesh::build(&f, level).unwrap());
    let u = GreenPotential::new(&f, mesh, level, [1.0, -0.3, 0.4]).unwrap();
    let mut cells = vec![CellRef::root()];
    while let Some(c) = cells.pop() {
        if c.level() == level {
            continue;
        }
        let kids: Vec<CellRef> = (0..3).map(|i| c.child(i)).collect();
        let sum: f64 = kids.iter().map(|k| u.cell_integral(k)).sum();
        assert!((sum - u.cell_integral(&c)).abs() < 1e-16, "{:?}", c.word);
        if c.level() < 3 {
            cells.extend(kids);
        }
    }
}

#[test]
fn green_potential_matches_kernel_integral() {
    let f = sg();
    let big = 8;
    let h = [1.0, 0.0, 0.0];
    let mesh = Arc::new(Mesh::build(&f, big + 1).unwrap());
    let u = GreenPotential::new(&f, mesh.clone(), 5, h).unwrap();
    for (id, x) in mesh.addresses()[3..mesh.count_at(2)].iter().enumerate() {
        let g = VertexFunction::from_fn(mesh.clone(), big + 1, |y| {
            green_eval(&f, x, y, big).unwrap() * harmonic_eval(f.harmonic(), h, y)
        })
        .unwrap();
        let integral = Interpolant::new(&g).cell_integral(&CellRef::root());
        assert!((-integral - u.nodal().value(id + 3)).abs() < 1e-4, "{x}");
    }
}
