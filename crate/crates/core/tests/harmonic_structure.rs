use std::sync::Arc;

use gasketlab::fractal::{Address, CellRef, Mesh, VertexFunction};
use gasketlab::green::v_partial;
use gasketlab::harmonic::{
    dirichlet_solve, discrete_laplacian, graph_energy, harmonic_eval, laplacian_estimate, mat_vec,
    normal_derivative, normal_derivative_with, solve_extension,
};
use gasketlab::Fractal;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NAMES: [&str; 3] = ["sg", "hexagasket", "sg3"];

fn harmonic_on(f: &Fractal, mesh: &Arc<Mesh>, level: usize, h: [f64; 3]) -> VertexFunction {
    VertexFunction::from_fn(mesh.clone(), level, |a| harmonic_eval(f.harmonic(), h, a)).unwrap()
}

#[test]
fn renormalization_factors() {
    let want = [("sg", 3.0 / 5.0), ("hexagasket", 3.0 / 7.0), ("sg3", 7.0 / 15.0)];
    for (name, r) in want {
        let f = Fractal::builtin(name).unwrap();
        assert!((f.harmonic().r - r).abs() < 1e-12, "{name}: {}", f.harmonic().r);
    }
}

#[test]
fn extension_rows_are_stochastic_and_consistent() {
    for name in NAMES {
        let f = Fractal::builtin(name).unwrap();
        let ext = &f.harmonic().extension;
        for a in ext {
            for row in a {
                assert!(row.iter().all(|&x| x >= -1e-15));
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            }
            assert_eq!(mat_vec(a, [2.5, 2.5, 2.5]).map(|x| (x - 2.5).abs() < 1e-14), [true; 3]);
        }
        for &[i, j, k, l] in &f.descriptor().identifications {
            for c in 0..3 {
                assert!((ext[i][j][c] - ext[k][l][c]).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn extension_matches_schur_complement_at_any_r() {
    // the extension does not depend on the common conductance
    let hex = Fractal::builtin("hexagasket").unwrap();
    let a = solve_extension(&hex, 3.0 / 7.0);
    let b = solve_extension(&hex, 0.9);
    for (x, y) in a.iter().zip(&b) {
        for r in 0..3 {
            for c in 0..3 {
                assert!((x[r][c] - y[r][c]).abs() < 1e-13);
            }
        }
    }
}

#[test]
fn extension_is_equivariant_under_symmetries() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for name in NAMES {
        let f = Fractal::builtin(name).unwrap();
        let ext = &f.harmonic().extension;
        for (perm, s) in f.symmetry_maps() {
            let b: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
            // g = h∘S^{-1} has g(q_{perm[j]}) = h(q_j)
            let mut bg = [0.0; 3];
            for j in 0..3 {
                bg[perm[j]] = b[j];
            }
            for i in 0..f.n_maps() {
                let hv = mat_vec(&ext[i], b);
                for j in 0..3 {
                    let img = s.apply(f.raw_coords(&[i as u8], j));
                    let (k, l) = (0..f.n_maps())
                        .flat_map(|k| (0..3).map(move |l| (k, l)))
                        .find(|&(k, l)| {
                            let p = f.raw_coords(&[k as u8], l);
                            (p[0] - img[0]).abs() < 1e-9 && (p[1] - img[1]).abs() < 1e-9
                        })
                        .unwrap();
                    let gv = mat_vec(&ext[k], bg);
                    assert!((gv[l] - hv[j]).abs() < 1e-13, "{name} perm {perm:?} cell {i}");
                }
            }
        }
    }
}

#[test]
fn harmonic_evaluation() {
    let sg = Fractal::builtin("sg").unwrap();
    let x = sg.address(&[0], 1).unwrap();
    assert!((harmonic_eval(sg.harmonic(), [1.0, 0.0, 0.0], &x) - 0.4).abs() < 1e-15);
    let y = sg.address(&[2, 1, 0], 2).unwrap();
    assert!((harmonic_eval(sg.harmonic(), [0.3, 0.3, 0.3], &y) - 0.3).abs() < 1e-15);
}

#[test]
fn gasket_junction_mean_identity_on_v4() {
    let sg = Fractal::builtin("sg").unwrap();
    let mesh = Arc::new(Mesh::build(&sg, 4).unwrap());
    let adj = mesh.adjacency(4);
    for h in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.2, -0.7, 1.3]] {
        let f = harmonic_on(&sg, &mesh, 4, h);
        for x in 3..mesh.count_at(4) {
            assert_eq!(adj[x].len(), 4);
            let mean = adj[x].iter().map(|&y| f.value(y)).sum::<f64>() / 4.0;
            assert!((mean - f.value(x)).abs() < 1e-12);
        }
    }
}

#[test]
fn harmonic_energy_is_level_independent() {
    for name in NAMES {
        let f = Fractal::builtin(name).unwrap();
        let depth = if f.n_maps() == 3 { 6 } else { 5 };
        let mesh = Arc::new(Mesh::build(&f, depth).unwrap());
        for j in 0..3 {
            let mut h = [0.0; 3];
            h[j] = 1.0;
            let fun = harmonic_on(&f, &mesh, depth, h);
            for m in 0..=depth {
                let e = graph_energy(f.harmonic(), &fun.restrict(m).unwrap());
                assert!((e - 2.0).abs() < 1e-12 * 2f64.powi(m as i32), "{name} m={m}: {e}");
            }
        }
    }
    let sg = Fractal::builtin("sg").unwrap();
    let mesh = Arc::new(Mesh::build(&sg, 2).unwrap());
    let constant = VertexFunction::from_fn(mesh, 2, |_| 4.0).unwrap();
    assert_eq!(graph_energy(sg.harmonic(), &constant), 0.0);
}

#[test]
fn maximum_principle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in NAMES {
        let f = Fractal::builtin(name).unwrap();
        let mesh = Arc::new(Mesh::build(&f, 4).unwrap());
        for _ in 0..100 {
            let h: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let fun = harmonic_on(&f, &mesh, 4, h);
            let lo = h.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(fun.values().iter().all(|&v| v >= lo - 1e-14 && v <= hi + 1e-14));
        }
    }
}

fn v_on(sg: &Fractal, mesh: &Arc<Mesh>, level: usize) -> VertexFunction {
    VertexFunction::from_fn(mesh.clone(), level, |a| v_partial(sg, a, usize::MAX - 1)).unwrap()
}

#[test]
fn discrete_laplacians() {
    let sg = Fractal::builtin("sg").unwrap();
    let mesh = Arc::new(Mesh::build(&sg, 10).unwrap());
    let x = sg.address(&[0], 1).unwrap();
    let h = harmonic_on(&sg, &mesh, 5, [0.3, 1.0, -2.0]);
    assert!(discrete_laplacian(&sg, &h, &x).unwrap().abs() < 1e-14);
    let ind = VertexFunction::from_fn(mesh.clone(), 3, |a| f64::from(*a == x)).unwrap();
    assert_eq!(discrete_laplacian(&sg, &ind, &x).unwrap(), -4.0);
    assert!(discrete_laplacian(&sg, &ind, &sg.address(&[], 0).unwrap()).is_err());

    // Δ_m v = (2/3)·5^{-m} from Δv = 1
    let v = v_on(&sg, &mesh, 10);
    for m in 1..=10 {
        let d = discrete_laplacian(&sg, &v.restrict(m).unwrap(), &x).unwrap();
        let want = 2.0 / 3.0 * 5f64.powi(-(m as i32));
        assert!((d - want).abs() < 1e-9 * want, "m={m}: {d} vs {want}");
    }
    for t in laplacian_estimate(&sg, &v, &x).unwrap() {
        assert!((t.1 - 1.0).abs() < 1e-3);
    }
    // every V3 junction
    for a in &mesh.addresses()[3..mesh.count_at(3)] {
        let est = laplacian_estimate(&sg, &v, a).unwrap();
        assert!((est.last().unwrap().1 - 1.0).abs() < 1e-3, "{a}");
    }
    let hex = Fractal::builtin("hexagasket").unwrap();
    let hmesh = Arc::new(Mesh::build(&hex, 2).unwrap());
    let hf = harmonic_on(&hex, &hmesh, 2, [1.0, 0.0, 0.0]);
    assert!(laplacian_estimate(&hex, &hf, &hex.address(&[0], 1).unwrap()).is_err());
}

#[test]
fn harmonic_laplacian_estimate_vanishes() {
    let sg = Fractal::builtin("sg").unwrap();
    let mesh = Arc::new(Mesh::build(&sg, 7).unwrap());
    let h = harmonic_on(&sg, &mesh, 7, [1.0, 0.0, 0.0]);
    let x = sg.address(&[1, 2], 0).unwrap();
    for (_, t) in laplacian_estimate(&sg, &h, &x).unwrap() {
        assert!(t.abs() < 1e-9);
    }
}

#[test]
fn laplacian_scales_by_one_fifth_under_maps() {
    let sg = Fractal::builtin("sg").unwrap();
    let mesh = Arc::new(Mesh::build(&sg, 9).unwrap());
    for i in 0..3u8 {
        let u = VertexFunction::from_fn(mesh.clone(), 9, |a: &Address| {
            let mut w = vec![i];
            w.extend(a.word());
            v_partial(&sg, &sg.address(&w, a.vertex()).unwrap(), usize::MAX - 1)
        })
        .unwrap();
        let x = sg.address(&[2], 0).unwrap();
        let last = laplacian_estimate(&sg, &u, &x).unwrap().last().unwrap().1;
        assert!((last - 0.2).abs() < 1e-6, "{last}");
    }
}

#[test]
fn normal_derivatives() {
    let sg = Fractal::builtin("sg").unwrap();
    let mesh = Arc::new(Mesh::build(&sg, 6).unwrap());
    let h = harmonic_on(&sg, &mesh, 6, [1.0, 0.0, 0.0]);
    for (_, t) in normal_derivative(&sg, &h, &CellRef::root(), 0).unwrap() {
        assert!((t - 2.0).abs() < 1e-11);
    }
    let c = VertexFunction::from_fn(mesh.clone(), 6, |_| 1.5).unwrap();
    for (_, t) in normal_derivative(&sg, &c, &CellRef::new(vec![1]), 2).unwrap() {
        assert_eq!(t, 0.0);
    }

    // matching condition for v at the junction F_0 q_1 = F_1 q_0
    let v = |a: &Address| Some(v_partial(&sg, a, usize::MAX - 1));
    let left = normal_derivative_with(&sg, v, &CellRef::new(vec![0]), 1, 14).unwrap();
    let right = normal_derivative_with(&sg, v, &CellRef::new(vec![1]), 0, 14).unwrap();
    let sums: Vec<f64> = left.iter().zip(&right).map(|(a, b)| a.1 + b.1).collect();
    assert!(sums.windows(2).all(|w| w[1].abs() < w[0].abs()));
    assert!(sums.last().unwrap().abs() < 1e-6, "{:?}", sums.last());
}

#[test]
fn dirichlet_solver() {
    let sg = Fractal::builtin("sg").unwrap();
    let mesh = Arc::new(Mesh::build(&sg, 8).unwrap());
    let zero = VertexFunction::from_fn(mesh.clone(), 6, |_| 0.0).unwrap();
    let u = dirichlet_solve(&sg, &zero, [1.0, -2.0, 0.5]).unwrap();
    let h = harmonic_on(&sg, &mesh, 6, [1.0, -2.0, 0.5]);
    for (a, b) in u.values().iter().zip(h.values()) {
        assert!((a - b).abs() < 1e-12);
    }

    let one = VertexFunction::from_fn(mesh.clone(), 8, |_| 1.0).unwrap();
    let u = dirichlet_solve(&sg, &one, [0.0; 3]).unwrap();
    for id in 0..mesh.count_at(3) {
        let want = v_partial(&sg, mesh.address(id), usize::MAX - 1);
        assert!((u.value(id) - want).abs() < 1e-5);
    }

    // round trip at every interior vertex
    let g = VertexFunction::from_fn(mesh.clone(), 6, |a| (a.level() as f64).sin() + 0.1 * a.vertex() as f64).unwrap();
    let u = dirichlet_solve(&sg, &g, [0.2, 0.0, -0.1]).unwrap();
    for id in 3..mesh.count_at(6) {
        let d = discrete_laplacian(&sg, &u, mesh.address(id)).unwrap();
        assert!((1.5 * 5f64.powi(6) * d - g.value(id)).abs() < 1e-10);
    }

    let hh = harmonic_on(&sg, &mesh, 8, [1.0, 0.0, 0.0]);
    let u = dirichlet_solve(&sg, &hh, [0.0; 3]).unwrap();
    let x = sg.address(&[0], 1).unwrap();
    let est = laplacian_estimate(&sg, &u, &x).unwrap();
    assert!((est.last().unwrap().1 - 0.4).abs() < 1e-8);

    let hex = Fractal::builtin("hexagasket").unwrap();
    let hm = Arc::new(Mesh::build(&hex, 2).unwrap());
    let g = VertexFunction::from_fn(hm, 2, |_| 1.0).unwrap();
    assert!(dirichlet_solve(&hex, &g, [0.0; 3]).is_err());
    assert!(Mesh::build(&sg, 11).is_err());
}
